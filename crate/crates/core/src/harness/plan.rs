//! Declarative experiment plans, read from TOML.
//!
//! ```toml
//! name = "desk"
//! seed = 7
//! methods = ["joint", "xavier", "informed_uniform", "es", "rs", "ers"]
//! ookb_sizes = [1, 5, 10]
//! replicates = 10
//! output_dir = "results/desk"
//!
//! [data]
//! kind = "synthetic"
//! seed = 1
//!
//! [session.finetune]
//! max_epochs = 150
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::InitMethod;
use crate::kg::{load_triples, KnowledgeGraph};
use crate::wordvec::{load_word_vectors, WordVectorTable};

use super::session::{SessionConfig, SessionMethod};
use super::synth::{generate_synthetic_kg, generate_word_vectors_for, SyntheticKgSpec};

/// Where a knowledge graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Generated; `spec` is a TOML [`SyntheticKgSpec`], the built-in default
    /// when absent.
    Synthetic {
        seed: u64,
        #[serde(default)]
        spec: Option<PathBuf>,
    },
    /// Triple TSV, with an optional word-vector file.
    Files {
        triples: PathBuf,
        #[serde(default)]
        word_vectors: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionPlan {
    /// Second graph providing the inserted entities. Synthetic sources
    /// default to the built-in deployment spec.
    pub deployment: DataSource,
    /// Entities inserted per replicate.
    pub inserted: usize,
    pub replicates: usize,
    pub methods: Vec<InitMethod>,
    /// Fine-tuning epochs logged after insertion.
    pub max_epochs: usize,
}

impl Default for CorruptionPlan {
    fn default() -> Self {
        CorruptionPlan {
            deployment: DataSource::Synthetic { seed: 2, spec: None },
            inserted: 10,
            replicates: 30,
            methods: InitMethod::ALL.to_vec(),
            max_epochs: 150,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepPlan {
    pub k_values: Vec<usize>,
    pub methods: Vec<InitMethod>,
    pub ookb_size: usize,
    pub replicates: usize,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            k_values: vec![2, 4, 8, 16, 32],
            methods: vec![InitMethod::Es, InitMethod::Rs, InitMethod::Ers],
            ookb_size: 5,
            replicates: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    /// Root of every replicate seed.
    pub seed: u64,
    pub data: DataSource,
    pub methods: Vec<SessionMethod>,
    pub ookb_sizes: Vec<usize>,
    pub replicates: usize,
    /// OOKB candidates need at least this many observations.
    pub min_ookb_observations: u64,
    pub session: SessionConfig,
    pub corruption: CorruptionPlan,
    pub sweep: SweepPlan,
    /// Worker threads for replicates; 0 uses every core.
    pub jobs: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentPlan {
    /// Full-scale protocol: sizes 1 to 10, 30 replicates, every method.
    fn default() -> Self {
        let mut methods = vec![SessionMethod::Joint];
        methods.extend(InitMethod::ALL.iter().map(|&m| SessionMethod::Init(m)));
        ExperimentPlan {
            name: "default".into(),
            seed: 2019,
            data: DataSource::Synthetic { seed: 1, spec: None },
            methods,
            ookb_sizes: (1..=10).collect(),
            replicates: 30,
            min_ookb_observations: 6,
            session: SessionConfig::default(),
            corruption: CorruptionPlan::default(),
            sweep: SweepPlan::default(),
            jobs: 0,
            output_dir: PathBuf::from("results"),
        }
    }
}

/// A knowledge graph with the word vectors for its entity names.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub kg: KnowledgeGraph,
    pub word_vectors: Option<WordVectorTable>,
}

impl ExperimentPlan {
    /// `"default"` names the built-in plan; anything else is a TOML path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if name_or_path == "default" {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(name_or_path)?;
        let plan: ExperimentPlan =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{name_or_path}: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.session.validate()?;
        if self.methods.is_empty() {
            return Err(Error::Config("plan lists no methods".into()));
        }
        if self.ookb_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("OOKB sizes must be positive".into()));
        }
        if self.sweep.k_values.iter().any(|&k| k == 0) {
            return Err(Error::Config("sweep k values must be positive".into()));
        }
        Ok(())
    }

    /// Loads or generates the main graph. Synthetic word vectors cover the
    /// deployment graph's names as well, so the corruption experiment can
    /// share them.
    pub fn load_data(&self) -> Result<ExperimentData> {
        match &self.data {
            DataSource::Synthetic { seed, spec } => {
                let spec = load_spec(spec.as_deref(), SyntheticKgSpec::default)?;
                let kg = generate_synthetic_kg(&spec, *seed)?;
                let deployment = match &self.corruption.deployment {
                    DataSource::Synthetic { spec: d, .. } => Some(load_spec(d.as_deref(), SyntheticKgSpec::deployment)?),
                    DataSource::Files { .. } => None,
                };
                let mut specs = vec![&spec];
                specs.extend(deployment.as_ref());
                let word_vectors = Some(generate_word_vectors_for(&specs, *seed)?);
                Ok(ExperimentData { kg, word_vectors })
            }
            DataSource::Files { triples, word_vectors } => Ok(ExperimentData {
                kg: load_triples(triples)?,
                word_vectors: word_vectors.as_ref().map(load_word_vectors).transpose()?,
            }),
        }
    }

    /// The graph whose entities are inserted in the corruption experiment.
    pub fn load_deployment(&self) -> Result<KnowledgeGraph> {
        match &self.corruption.deployment {
            DataSource::Synthetic { seed, spec } => {
                let spec = load_spec(spec.as_deref(), SyntheticKgSpec::deployment)?;
                generate_synthetic_kg(&spec, *seed)
            }
            DataSource::Files { triples, .. } => load_triples(triples),
        }
    }
}

fn load_spec(path: Option<&Path>, default: fn() -> SyntheticKgSpec) -> Result<SyntheticKgSpec> {
    match path {
        Some(p) => SyntheticKgSpec::load(p),
        None => Ok(default()),
    }
}
