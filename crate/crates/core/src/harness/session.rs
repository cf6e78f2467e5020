//! One two-session replicate: train Θ⁰ on D⁰, insert the OOKB entities, and
//! fine-tune Θ¹ on D¹ while logging MRR* per epoch.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Evaluator, QueryWeighting, Restriction};
use crate::init::{initialize_ookb, InitConfig, InitMethod, InitReport, OokbEntity};
use crate::kg::{split_for_session, CountedTripleSet, DatasetSplit, EntityId, KnowledgeGraph, SessionSplit, SplitRatios};
use crate::model::{BlockLayout, EmbeddingModel};
use crate::train::{train, EpochControl, TrainConfig};
use crate::wordvec::WordVectorTable;

/// A learning session: its dataset, the model trained on it, and the
/// entities that were new to it.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub n: usize,
    pub dataset: DatasetSplit,
    pub model: EmbeddingModel,
    pub ookb: Vec<EntityId>,
    pub insert_triples: CountedTripleSet,
}

/// How the session-1 model is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SessionMethod {
    /// Train from scratch on D¹ with the session-0 settings.
    Joint,
    /// Initialize the OOKB entities, then fine-tune.
    Init(InitMethod),
}

impl SessionMethod {
    pub fn name(self) -> &'static str {
        match self {
            SessionMethod::Joint => "joint",
            SessionMethod::Init(m) => m.name(),
        }
    }
}

impl std::fmt::Display for SessionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SessionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("joint") {
            Ok(SessionMethod::Joint)
        } else {
            s.parse().map(SessionMethod::Init)
        }
    }
}

impl TryFrom<String> for SessionMethod {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SessionMethod> for String {
    fn from(m: SessionMethod) -> String {
        m.name().to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub dim: usize,
    /// Number of scalar diagonal entries; the rest form 2×2 blocks.
    /// Defaults to half the dimension.
    pub scalars: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { dim: 100, scalars: None }
    }
}

impl ModelConfig {
    pub fn layout(&self) -> Result<BlockLayout> {
        match self.scalars {
            Some(s) => BlockLayout::new(self.dim, s),
            None => BlockLayout::balanced(self.dim),
        }
    }
}

/// Settings shared by every replicate of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub model: ModelConfig,
    pub split: SplitRatios,
    pub session0: TrainConfig,
    pub finetune: TrainConfig,
    pub init: InitConfig,
    pub weighting: QueryWeighting,
    /// MRR* points below the joint reference that count as converged.
    pub convergence_threshold: f64,
    /// Stop fine-tuning at the first converged epoch.
    pub stop_at_convergence: bool,
    /// The joint reference is the mean MRR* over this many final joint
    /// epochs.
    pub joint_reference_window: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            model: ModelConfig::default(),
            split: SplitRatios::default(),
            session0: TrainConfig::default(),
            finetune: TrainConfig::fine_tuning(),
            init: InitConfig::default(),
            weighting: QueryWeighting::Count,
            convergence_threshold: 8.0,
            stop_at_convergence: false,
            joint_reference_window: 10,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.layout()?;
        self.session0.validate()?;
        self.finetune.validate()?;
        self.init.validate()?;
        if !(self.convergence_threshold >= 0.0) {
            return Err(Error::Config("convergence_threshold must be non-negative".into()));
        }
        if self.joint_reference_window == 0 {
            return Err(Error::Config("joint_reference_window must be positive".into()));
        }
        Ok(())
    }
}

/// Seeds for the random choices of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateSeeds {
    pub split: u64,
    pub theta0: u64,
    pub joint: u64,
    pub init: u64,
    pub finetune: u64,
}

impl ReplicateSeeds {
    pub fn derive(base: u64) -> Self {
        ReplicateSeeds {
            split: mix(base, 1),
            theta0: mix(base, 2),
            joint: mix(base, 3),
            init: mix(base, 4),
            finetune: mix(base, 5),
        }
    }
}

/// SplitMix64 finalizer over `base` and a stream index.
pub fn mix(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Entities that appear in at least `min_observations` observations.
pub fn eligible_ookb(kg: &KnowledgeGraph, min_observations: u64) -> Vec<EntityId> {
    kg.entity_observations()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= min_observations)
        .map(|(i, _)| EntityId::from(i))
        .collect()
}

/// Draws `size` distinct entities uniformly from `candidates`.
pub fn select_ookb(candidates: &[EntityId], size: usize, seed: u64) -> Result<Vec<EntityId>> {
    if size > candidates.len() {
        return Err(Error::invalid(format!(
            "cannot select {size} OOKB entities from {} eligible",
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample(&mut rng, candidates.len(), size)
        .into_iter()
        .map(|i| candidates[i])
        .collect())
}

/// MRR* (percent) over all D¹ test queries and over the old/new subsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub all: Option<f64>,
    pub old_entities: Option<f64>,
    pub new_entities: Option<f64>,
}

/// First epoch of a converged run, or not converged within the log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convergence {
    Converged(usize),
    NotConverged,
}

impl Convergence {
    /// Epoch count for averaging: unconverged runs count as `cap`.
    pub fn epochs_or(self, cap: usize) -> usize {
        match self {
            Convergence::Converged(e) => e,
            Convergence::NotConverged => cap,
        }
    }

    pub fn converged(self) -> bool {
        matches!(self, Convergence::Converged(_))
    }
}

/// First index `i` with `log[i] >= joint_reference - threshold`; index 0 is
/// the measurement before any fine-tuning.
pub fn epochs_to_convergence(log: &[Option<f64>], joint_reference: f64, threshold: f64) -> Convergence {
    log.iter()
        .position(|m| m.is_some_and(|v| v >= joint_reference - threshold))
        .map_or(Convergence::NotConverged, Convergence::Converged)
}

/// Everything about a replicate that does not depend on the initializer.
#[derive(Debug, Clone)]
pub struct PreparedSession {
    pub split: SessionSplit,
    pub session0: SessionState,
    /// Θ⁰'s MRR* (percent) on the D⁰ test set.
    pub theta0_mrr: Option<f64>,
    /// Per-epoch MRR* of the joint model; the last entry is the reference.
    /// Empty when the joint model was not trained.
    pub joint_curve: Vec<EpochMetrics>,
    pub joint_reference: Option<f64>,
    /// Insert triples from the D¹ training portion, handed to RS/ERS.
    pub init_triples: CountedTripleSet,
    evaluator: Evaluator,
    seeds: ReplicateSeeds,
}

/// Splits `kg` around `ookb` and trains Θ⁰ on D⁰. With `with_joint`, also
/// trains the joint model on D¹, which convergence detection needs.
pub fn prepare_session(
    kg: &KnowledgeGraph,
    ookb: &[EntityId],
    cfg: &SessionConfig,
    seeds: ReplicateSeeds,
    with_joint: bool,
) -> Result<PreparedSession> {
    cfg.validate()?;
    let split = split_for_session(kg, ookb, cfg.split, seeds.split)?;
    let layout = cfg.model.layout()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seeds.theta0);
    let mut theta0 = EmbeddingModel::random(layout, split.d0.entities.clone(), split.d0.relations.clone(), &mut rng);
    let s0 = TrainConfig {
        seed: seeds.theta0,
        ..cfg.session0
    };
    train(&mut theta0, &split.d0, &s0, |_, _| EpochControl::Continue)?;
    let d0_eval = Evaluator::new(&split.d0, &split.d0.all(), cfg.weighting);
    let theta0_mrr = d0_eval.evaluate(&theta0, Restriction::All).percent();

    let evaluator = Evaluator::new(&split.d1, &split.d1.all(), cfg.weighting);
    let known = split.known_count();
    let measure = |epoch: usize, m: &EmbeddingModel| metrics(&evaluator, epoch, m, known);

    let mut joint_curve = Vec::new();
    let mut joint_reference = None;
    if with_joint {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.joint);
        let mut joint = EmbeddingModel::random(layout, split.d1.entities.clone(), split.d1.relations.clone(), &mut rng);
        joint_curve.push(measure(0, &joint));
        let jc = TrainConfig {
            seed: seeds.joint,
            ..cfg.session0
        };
        train(&mut joint, &split.d1, &jc, |e, m| {
            joint_curve.push(measure(e, m));
            EpochControl::Continue
        })?;
        let tail: Vec<f64> = joint_curve
            .iter()
            .rev()
            .take(cfg.joint_reference_window)
            .filter_map(|m| m.all)
            .collect();
        if tail.is_empty() {
            return Err(Error::invalid("D¹ test set yields no evaluable queries"));
        }
        joint_reference = Some(tail.iter().sum::<f64>() / tail.len() as f64);
    }

    let init_triples = split.insert_triples.filtered(|t| split.d1.train.contains(t));
    let session0 = SessionState {
        n: 0,
        dataset: split.d0.clone(),
        model: theta0,
        ookb: Vec::new(),
        insert_triples: CountedTripleSet::new(),
    };
    Ok(PreparedSession {
        split,
        session0,
        theta0_mrr,
        joint_curve,
        joint_reference,
        init_triples,
        evaluator,
        seeds,
    })
}

fn metrics(evaluator: &Evaluator, epoch: usize, model: &EmbeddingModel, known: usize) -> EpochMetrics {
    EpochMetrics {
        epoch,
        all: evaluator.evaluate(model, Restriction::All).percent(),
        old_entities: evaluator.evaluate(model, Restriction::EntitiesBelow(known)).percent(),
        new_entities: evaluator.evaluate(model, Restriction::TouchingAtOrAbove(known)).percent(),
    }
}

/// Result of one method on one prepared replicate.
#[derive(Debug, Clone)]
pub struct SessionRun {
    pub method: SessionMethod,
    /// Entry 0 is measured right after initialization.
    pub epochs: Vec<EpochMetrics>,
    /// `None` when the replicate has no joint reference.
    pub convergence: Option<Convergence>,
    pub report: InitReport,
    pub session1: SessionState,
}

impl SessionRun {
    pub fn immediate(&self) -> Option<f64> {
        self.epochs.first().and_then(|m| m.all)
    }
}

/// Runs session 1 with `method` on a prepared replicate.
///
/// For an initializer, Θ¹ is Θ⁰ with the OOKB rows appended; it is measured
/// once before any update and then after every fine-tuning epoch. With
/// `stop_at_convergence`, fine-tuning ends at the first converged epoch.
/// [`SessionMethod::Joint`] replays the joint model's curve.
pub fn run_incremental_session(
    prep: &PreparedSession,
    method: SessionMethod,
    cfg: &SessionConfig,
    word_vectors: Option<&WordVectorTable>,
) -> Result<SessionRun> {
    let convergence_of = |epochs: &[EpochMetrics]| {
        let log: Vec<Option<f64>> = epochs.iter().map(|m| m.all).collect();
        prep.joint_reference
            .map(|r| epochs_to_convergence(&log, r, cfg.convergence_threshold))
    };
    let init = match method {
        SessionMethod::Joint if prep.joint_reference.is_none() => {
            return Err(Error::invalid("joint method requested but the joint model was not trained"));
        }
        SessionMethod::Joint => {
            return Ok(SessionRun {
                method,
                convergence: convergence_of(&prep.joint_curve),
                epochs: prep.joint_curve.clone(),
                report: InitReport::default(),
                session1: SessionState {
                    n: 1,
                    dataset: prep.split.d1.clone(),
                    model: prep.session0.model.clone(),
                    ookb: prep.split.ookb.clone(),
                    insert_triples: prep.init_triples.clone(),
                },
            });
        }
        SessionMethod::Init(m) => m,
    };

    let known = prep.split.known_count();
    let ookb: Vec<OokbEntity> = prep
        .split
        .ookb
        .iter()
        .map(|e| OokbEntity {
            name: prep.split.d1.entities.name(e.index()).to_owned(),
        })
        .collect();
    let icfg = InitConfig {
        method: init,
        seed: prep.seeds.init,
        ..cfg.init
    };
    let (mut model, report) = initialize_ookb(&prep.session0.model, &icfg, &ookb, &prep.init_triples, word_vectors)?;

    let mut epochs = vec![metrics(&prep.evaluator, 0, &model, known)];
    let target = prep.joint_reference.map(|r| r - cfg.convergence_threshold);
    let done = |m: &EpochMetrics| {
        cfg.stop_at_convergence && matches!((m.all, target), (Some(v), Some(t)) if v >= t)
    };
    if !done(&epochs[0]) {
        let ft = TrainConfig {
            seed: prep.seeds.finetune,
            ..cfg.finetune
        };
        train(&mut model, &prep.split.d1, &ft, |e, m| {
            let row = metrics(&prep.evaluator, e, m, known);
            let stop = done(&row);
            epochs.push(row);
            if stop {
                EpochControl::Stop
            } else {
                EpochControl::Continue
            }
        })?;
    }
    Ok(SessionRun {
        method,
        convergence: convergence_of(&epochs),
        epochs,
        report,
        session1: SessionState {
            n: 1,
            dataset: prep.split.d1.clone(),
            model,
            ookb: prep.split.ookb.clone(),
            insert_triples: prep.init_triples.clone(),
        },
    })
}
