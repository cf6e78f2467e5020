//! Synthetic data generation and experiment drivers.

pub mod experiment;
pub mod plan;
pub mod session;
pub mod synth;
