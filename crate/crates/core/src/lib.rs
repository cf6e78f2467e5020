//! Knowledge-graph embeddings with the ANALOGY model and informed
//! initialization of entities that arrive after training.
//!
//! - [`kg`]: counted triples, splits, negative sampling.
//! - [`model`]: block-diagonal normal relation matrices, logistic loss.
//! - [`train`]: mini-batch SGD.
//! - [`wordvec`]: word vectors for entity names.
//! - [`init`]: initializing new entities from word vectors and relations.
//! - [`eval`]: ranking metrics, including the ranking-distance MRR*.
//! - [`harness`]: synthetic data and incremental-session experiments.

pub mod error;
pub mod eval;
pub mod harness;
pub mod init;
pub mod kg;
pub mod model;
pub mod train;
pub mod wordvec;

pub use error::{Error, Result};
