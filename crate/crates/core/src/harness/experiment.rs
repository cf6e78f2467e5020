//! Replicated experiments over recorded OOKB sets, their summary tables, and
//! the CSV and gnuplot files written from them.
//!
//! Every replicate is independent and deterministic given the plan seed, so
//! replicates run in parallel and are collected in a fixed order; rerunning a
//! plan reproduces its output files byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::InitMethod;
use crate::kg::{EntityId, KnowledgeGraph};
use crate::wordvec::WordVectorTable;

use super::plan::{ExperimentData, ExperimentPlan};
use super::session::{
    eligible_ookb, mix, prepare_session, run_incremental_session, select_ookb, Convergence, EpochMetrics,
    ReplicateSeeds, SessionConfig, SessionMethod,
};

const MAIN_STREAM: u64 = 0x6d61_696e;
const SWEEP_STREAM: u64 = 0x7377_6565;
const CORRUPTION_STREAM: u64 = 0x636f_7272;

/// The OOKB entities of one replicate, shared by every method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OokbSet {
    pub ookb_size: usize,
    pub replicate: usize,
    /// Root of the replicate's [`ReplicateSeeds`].
    pub seed: u64,
    /// Entity ids in the source graph.
    pub entities: Vec<EntityId>,
}

/// Draws `replicates` OOKB sets for each size from the entities with at least
/// `min_observations` observations.
pub fn record_ookb_sets(
    kg: &KnowledgeGraph,
    sizes: &[usize],
    replicates: usize,
    min_observations: u64,
    seed: u64,
) -> Result<Vec<OokbSet>> {
    let candidates = eligible_ookb(kg, min_observations);
    let mut sets = Vec::with_capacity(sizes.len() * replicates);
    for &size in sizes {
        for replicate in 0..replicates {
            let base = mix(mix(seed, size as u64), replicate as u64);
            sets.push(OokbSet {
                ookb_size: size,
                replicate,
                seed: base,
                entities: select_ookb(&candidates, size, mix(base, 0))?,
            });
        }
    }
    Ok(sets)
}

/// A method, optionally with its indicator-set size overridden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variant {
    pub method: SessionMethod,
    pub k: Option<usize>,
}

impl Variant {
    pub fn plain(method: SessionMethod) -> Self {
        Variant { method, k: None }
    }

    fn config(&self, base: &SessionConfig) -> SessionConfig {
        let mut cfg = base.clone();
        if let (SessionMethod::Init(m), Some(k)) = (self.method, self.k) {
            cfg.init = cfg.init.with_k(m, k);
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub variant: Variant,
    pub ookb_size: usize,
    pub replicate: usize,
    pub epochs: Vec<EpochMetrics>,
    pub convergence: Option<Convergence>,
    /// OOKB entities whose initializer fell back to another method.
    pub fallbacks: usize,
}

impl MethodRun {
    pub fn immediate(&self) -> Option<f64> {
        self.epochs.first().and_then(|m| m.all)
    }
}

/// A replicate, or one method within it, that raised an error.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub ookb_size: usize,
    pub replicate: usize,
    /// `None` when the shared session-0 preparation failed.
    pub method: Option<SessionMethod>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSet {
    pub sets: Vec<OokbSet>,
    pub variants: Vec<Variant>,
    pub runs: Vec<MethodRun>,
    pub failures: Vec<ReplicateFailure>,
    /// Fine-tuning epoch cap, the value unconverged runs count as.
    pub epoch_cap: usize,
    /// Session-0 epoch count, the joint model's cap.
    pub joint_cap: usize,
}

impl RunSet {
    pub fn sizes(&self) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        self.sets.iter().map(|s| s.ookb_size).filter(|s| seen.insert(*s)).collect()
    }

    fn cap_for(&self, method: SessionMethod) -> usize {
        match method {
            SessionMethod::Joint => self.joint_cap,
            SessionMethod::Init(_) => self.epoch_cap,
        }
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}

/// Runs every variant on every recorded set. Each set's Θ⁰ (and joint model,
/// with `with_joint`) is trained once and shared by the variants.
pub fn run_replicates(
    kg: &KnowledgeGraph,
    word_vectors: Option<&WordVectorTable>,
    sets: &[OokbSet],
    variants: &[Variant],
    cfg: &SessionConfig,
    with_joint: bool,
    jobs: usize,
) -> Result<RunSet> {
    cfg.validate()?;
    let per_set: Vec<(Vec<MethodRun>, Vec<ReplicateFailure>)> = thread_pool(jobs)?.install(|| {
        sets.par_iter()
            .map(|set| run_one_set(kg, word_vectors, set, variants, cfg, with_joint))
            .collect()
    });
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in per_set {
        runs.extend(r);
        failures.extend(f);
    }
    Ok(RunSet {
        sets: sets.to_vec(),
        variants: variants.to_vec(),
        runs,
        failures,
        epoch_cap: cfg.finetune.max_epochs,
        joint_cap: cfg.session0.max_epochs,
    })
}

fn run_one_set(
    kg: &KnowledgeGraph,
    word_vectors: Option<&WordVectorTable>,
    set: &OokbSet,
    variants: &[Variant],
    cfg: &SessionConfig,
    with_joint: bool,
) -> (Vec<MethodRun>, Vec<ReplicateFailure>) {
    let failure = |method: Option<SessionMethod>, e: Error| {
        log::warn!(
            "replicate {} of size {}{} failed and is excluded: {e}",
            set.replicate,
            set.ookb_size,
            method.map(|m| format!(" ({m})")).unwrap_or_default()
        );
        ReplicateFailure {
            ookb_size: set.ookb_size,
            replicate: set.replicate,
            method,
            message: e.to_string(),
        }
    };
    let prep = match prepare_session(kg, &set.entities, cfg, ReplicateSeeds::derive(set.seed), with_joint) {
        Ok(p) => p,
        Err(e) => return (Vec::new(), vec![failure(None, e)]),
    };
    log::info!(
        "size {} replicate {}: Θ⁰ MRR* {:.2}, joint {:.2}",
        set.ookb_size,
        set.replicate,
        prep.theta0_mrr.unwrap_or(f64::NAN),
        prep.joint_reference.unwrap_or(f64::NAN)
    );
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for v in variants {
        match run_incremental_session(&prep, v.method, &v.config(cfg), word_vectors) {
            Ok(run) => runs.push(MethodRun {
                variant: *v,
                ookb_size: set.ookb_size,
                replicate: set.replicate,
                fallbacks: run.report.fallback_count(),
                epochs: run.epochs,
                convergence: run.convergence,
            }),
            Err(e) => failures.push(failure(Some(v.method), e)),
        }
    }
    (runs, failures)
}

/// Runs the plan's methods over its sizes and replicates. Without
/// `fine_tune`, only the epoch-0 measurement is taken.
pub fn run_main(plan: &ExperimentPlan, data: &ExperimentData, with_joint: bool, fine_tune: bool) -> Result<RunSet> {
    plan.validate()?;
    let sets = record_ookb_sets(
        &data.kg,
        &plan.ookb_sizes,
        plan.replicates,
        plan.min_ookb_observations,
        mix(plan.seed, MAIN_STREAM),
    )?;
    let mut cfg = plan.session.clone();
    if !fine_tune {
        cfg.finetune.max_epochs = 0;
    }
    let variants: Vec<Variant> = plan.methods.iter().map(|&m| Variant::plain(m)).collect();
    let with_joint = with_joint || plan.methods.contains(&SessionMethod::Joint);
    run_replicates(&data.kg, data.word_vectors.as_ref(), &sets, &variants, &cfg, with_joint, plan.jobs)
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Sample standard deviation; zero for fewer than two values.
fn std_dev(xs: &[f64]) -> f64 {
    match mean(xs) {
        Some(m) if xs.len() > 1 => (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt(),
        _ => 0.0,
    }
}

/// Mean epoch-0 MRR* of one method at one OOKB size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImmediateRow {
    pub method: SessionMethod,
    pub ookb_size: usize,
    pub replicates: usize,
    pub mean_mrr_star: f64,
    pub std_mrr_star: f64,
    pub mean_old_entities: Option<f64>,
    pub mean_new_entities: Option<f64>,
}

pub fn immediate_table(rs: &RunSet) -> Vec<ImmediateRow> {
    let mut rows = Vec::new();
    for v in &rs.variants {
        for size in rs.sizes() {
            let firsts: Vec<&EpochMetrics> = rs
                .runs
                .iter()
                .filter(|r| r.variant == *v && r.ookb_size == size)
                .filter_map(|r| r.epochs.first())
                .collect();
            let all: Vec<f64> = firsts.iter().filter_map(|m| m.all).collect();
            let Some(mean_all) = mean(&all) else { continue };
            let old: Vec<f64> = firsts.iter().filter_map(|m| m.old_entities).collect();
            let new: Vec<f64> = firsts.iter().filter_map(|m| m.new_entities).collect();
            rows.push(ImmediateRow {
                method: v.method,
                ookb_size: size,
                replicates: all.len(),
                mean_mrr_star: mean_all,
                std_mrr_star: std_dev(&all),
                mean_old_entities: mean(&old),
                mean_new_entities: mean(&new),
            });
        }
    }
    rows
}

/// Epochs-to-convergence of one method, pooled over OOKB sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub method: SessionMethod,
    pub replicates: usize,
    /// Unconverged runs count as the epoch cap.
    pub mean_epochs: f64,
    pub std_epochs: f64,
    pub not_converged: usize,
}

pub fn convergence_table(rs: &RunSet) -> Vec<ConvergenceRow> {
    rs.variants
        .iter()
        .filter_map(|v| {
            let conv: Vec<Convergence> = rs
                .runs
                .iter()
                .filter(|r| r.variant == *v)
                .filter_map(|r| r.convergence)
                .collect();
            let cap = rs.cap_for(v.method);
            let epochs: Vec<f64> = conv.iter().map(|c| c.epochs_or(cap) as f64).collect();
            Some(ConvergenceRow {
                method: v.method,
                replicates: epochs.len(),
                mean_epochs: mean(&epochs)?,
                std_epochs: std_dev(&epochs),
                not_converged: conv.iter().filter(|c| !c.converged()).count(),
            })
        })
        .collect()
}

/// Mean epoch-0 MRR* and epochs-to-convergence at one indicator-set size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: InitMethod,
    pub k: usize,
    pub replicates: usize,
    pub mean_immediate: f64,
    pub mean_epochs: Option<f64>,
    pub std_epochs: f64,
    pub not_converged: usize,
}

/// How one method responds to the indicator-set size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrend {
    pub method: InitMethod,
    /// Spearman correlation of mean epochs against k; `None` when either
    /// side is constant.
    pub epochs_vs_k: Option<f64>,
    /// k with the highest mean immediate MRR*; the smaller k on ties.
    pub best_k: usize,
    pub immediate_at_best_k: f64,
    pub largest_k: usize,
    pub immediate_at_largest_k: f64,
}

pub fn sweep_table(rs: &RunSet) -> Vec<SweepRow> {
    rs.variants
        .iter()
        .filter_map(|v| {
            let (SessionMethod::Init(method), Some(k)) = (v.method, v.k) else {
                return None;
            };
            let runs: Vec<&MethodRun> = rs.runs.iter().filter(|r| r.variant == *v).collect();
            let imm: Vec<f64> = runs.iter().filter_map(|r| r.immediate()).collect();
            let conv: Vec<Convergence> = runs.iter().filter_map(|r| r.convergence).collect();
            let epochs: Vec<f64> = conv.iter().map(|c| c.epochs_or(rs.epoch_cap) as f64).collect();
            Some(SweepRow {
                method,
                k,
                replicates: imm.len(),
                mean_immediate: mean(&imm)?,
                mean_epochs: mean(&epochs),
                std_epochs: std_dev(&epochs),
                not_converged: conv.iter().filter(|c| !c.converged()).count(),
            })
        })
        .collect()
}

pub fn sweep_trends(rows: &[SweepRow]) -> Vec<SweepTrend> {
    let mut by_method: BTreeMap<InitMethod, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        by_method.entry(r.method).or_default().push(r);
    }
    by_method
        .into_iter()
        .map(|(method, mut rs)| {
            rs.sort_by_key(|r| r.k);
            let with_epochs: Vec<(f64, f64)> =
                rs.iter().filter_map(|r| r.mean_epochs.map(|e| (r.k as f64, e))).collect();
            let (ks, es): (Vec<f64>, Vec<f64>) = with_epochs.into_iter().unzip();
            let best = rs
                .iter()
                .fold(None::<&SweepRow>, |b, r| match b {
                    Some(b) if b.mean_immediate >= r.mean_immediate => Some(b),
                    _ => Some(r),
                })
                .expect("grouped rows are non-empty");
            let largest = rs.last().expect("grouped rows are non-empty");
            SweepTrend {
                method,
                epochs_vs_k: spearman(&ks, &es),
                best_k: best.k,
                immediate_at_best_k: best.mean_immediate,
                largest_k: largest.k,
                immediate_at_largest_k: largest.mean_immediate,
            }
        })
        .collect()
}

/// Ranks from 1, tied values sharing their mean position.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` for fewer
/// than two points or when either variable is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let (mx, my) = (mean(&rx)?, mean(&ry)?);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Runs the sweep plan: each ISI method at each k on freshly recorded sets.
/// Fine-tuning stops at convergence, which leaves the epoch counts unchanged.
pub fn run_sweep(plan: &ExperimentPlan, data: &ExperimentData, k_values: &[usize]) -> Result<RunSet> {
    plan.validate()?;
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(Error::Config("sweep k values must be positive and non-empty".into()));
    }
    let sweep = &plan.sweep;
    let sets = record_ookb_sets(
        &data.kg,
        &[sweep.ookb_size],
        sweep.replicates,
        plan.min_ookb_observations,
        mix(plan.seed, SWEEP_STREAM),
    )?;
    let variants: Vec<Variant> = sweep
        .methods
        .iter()
        .flat_map(|&m| {
            k_values.iter().map(move |&k| Variant {
                method: SessionMethod::Init(m),
                k: Some(k),
            })
        })
        .collect();
    let mut cfg = plan.session.clone();
    cfg.stop_at_convergence = true;
    run_replicates(&data.kg, data.word_vectors.as_ref(), &sets, &variants, &cfg, true, plan.jobs)
}

/// Entities of `deployment` absent from `base`, with the observations that
/// join each of them to `base`'s vocabulary.
pub fn deployment_candidates(base: &KnowledgeGraph, deployment: &KnowledgeGraph) -> Vec<(String, u64)> {
    let known = |e: EntityId| base.entity_id(deployment.entities.name(e.index())).is_some();
    let mut joined = vec![0u64; deployment.entities.len()];
    for (t, c) in deployment.triples.iter() {
        match (known(t.head), known(t.tail)) {
            (true, false) => joined[t.tail.index()] += c,
            (false, true) => joined[t.head.index()] += c,
            _ => {}
        }
    }
    (0..deployment.entities.len())
        .filter(|&i| !known(EntityId::from(i)))
        .map(|i| (deployment.entities.name(i).to_owned(), joined[i]))
        .collect()
}

/// `base` plus every `deployment` triple that touches an inserted entity and
/// otherwise only `base` or inserted entities. Returns the merged graph and
/// the inserted entities' ids in it.
pub fn merge_for_insertion(
    base: &KnowledgeGraph,
    deployment: &KnowledgeGraph,
    inserted: &[String],
) -> Result<(KnowledgeGraph, Vec<EntityId>)> {
    let chosen: BTreeSet<&str> = inserted.iter().map(String::as_str).collect();
    let mut merged = base.clone();
    for (t, c) in deployment.triples.iter() {
        let h = deployment.entities.name(t.head.index());
        let tl = deployment.entities.name(t.tail.index());
        let r = deployment.relations.name(t.relation.index());
        let new_h = chosen.contains(h);
        let new_t = chosen.contains(tl);
        let ok = |n: &str, new: bool| new || base.entity_id(n).is_some();
        if (new_h || new_t) && ok(h, new_h) && ok(tl, new_t) {
            merged.add_named(h, r, tl, c);
        }
    }
    let ids = inserted
        .iter()
        .map(|n| {
            merged
                .entity_id(n)
                .ok_or_else(|| Error::invalid(format!("inserted entity `{n}` has no triple joining the base graph")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((merged, ids))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionRun {
    pub method: InitMethod,
    pub replicate: usize,
    /// Θ⁰'s MRR* before insertion, over base-graph test queries.
    pub pre_insertion: f64,
    pub epochs: Vec<EpochMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionRuns {
    /// Inserted entity names per replicate.
    pub inserted: Vec<Vec<String>>,
    pub methods: Vec<InitMethod>,
    pub runs: Vec<CorruptionRun>,
    pub failures: Vec<ReplicateFailure>,
}

/// Trains on the whole base graph, inserts entities drawn from the
/// deployment graph, and logs MRR* over the base entities.
pub fn run_corruption(plan: &ExperimentPlan, data: &ExperimentData, deployment: &KnowledgeGraph) -> Result<CorruptionRuns> {
    plan.validate()?;
    let cp = &plan.corruption;
    let candidates: Vec<String> = deployment_candidates(&data.kg, deployment)
        .into_iter()
        .filter(|(_, c)| *c >= plan.min_ookb_observations)
        .map(|(n, _)| n)
        .collect();
    let ids: Vec<EntityId> = (0..candidates.len()).map(EntityId::from).collect();
    let root = mix(plan.seed, CORRUPTION_STREAM);
    let inserted: Vec<Vec<String>> = (0..cp.replicates)
        .map(|r| {
            let picks = select_ookb(&ids, cp.inserted, mix(mix(root, r as u64), 0))?;
            Ok(picks.into_iter().map(|e| candidates[e.index()].clone()).collect())
        })
        .collect::<Result<_>>()?;

    let mut cfg = plan.session.clone();
    cfg.finetune.max_epochs = cp.max_epochs;
    cfg.stop_at_convergence = false;
    cfg.validate()?;
    let per_rep: Vec<(Vec<CorruptionRun>, Vec<ReplicateFailure>)> = thread_pool(plan.jobs)?.install(|| {
        inserted
            .par_iter()
            .enumerate()
            .map(|(r, names)| corruption_replicate(data, deployment, names, r, mix(root, r as u64), &cfg, &cp.methods))
            .collect()
    });
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in per_rep {
        runs.extend(r);
        failures.extend(f);
    }
    Ok(CorruptionRuns {
        inserted,
        methods: cp.methods.clone(),
        runs,
        failures,
    })
}

fn corruption_replicate(
    data: &ExperimentData,
    deployment: &KnowledgeGraph,
    names: &[String],
    replicate: usize,
    seed: u64,
    cfg: &SessionConfig,
    methods: &[InitMethod],
) -> (Vec<CorruptionRun>, Vec<ReplicateFailure>) {
    let failure = |method: Option<InitMethod>, e: Error| {
        log::warn!("corruption replicate {replicate} failed and is excluded: {e}");
        ReplicateFailure {
            ookb_size: names.len(),
            replicate,
            method: method.map(SessionMethod::Init),
            message: e.to_string(),
        }
    };
    let prepared = merge_for_insertion(&data.kg, deployment, names)
        .and_then(|(kg, ookb)| prepare_session(&kg, &ookb, cfg, ReplicateSeeds::derive(seed), false));
    let prep = match prepared {
        Ok(p) => p,
        Err(e) => return (Vec::new(), vec![failure(None, e)]),
    };
    let Some(pre) = prep.theta0_mrr else {
        return (
            Vec::new(),
            vec![failure(None, Error::invalid("base test set yields no evaluable queries"))],
        );
    };
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for &m in methods {
        match run_incremental_session(&prep, SessionMethod::Init(m), cfg, data.word_vectors.as_ref()) {
            Ok(run) => runs.push(CorruptionRun {
                method: m,
                replicate,
                pre_insertion: pre,
                epochs: run.epochs,
            }),
            Err(e) => failures.push(failure(Some(m), e)),
        }
    }
    (runs, failures)
}

/// Old-entity MRR* at epoch 0 against the pre-insertion value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRow {
    pub method: InitMethod,
    pub replicates: usize,
    pub pre_insertion: f64,
    pub epoch0_old_entities: f64,
    /// Mean of pre-insertion minus epoch-0, in MRR* points.
    pub drop: f64,
    /// Mean of drop over pre-insertion.
    pub relative_drop: f64,
    pub epoch0_new_entities: Option<f64>,
}

pub fn corruption_table(cr: &CorruptionRuns) -> Vec<CorruptionRow> {
    cr.methods
        .iter()
        .filter_map(|&m| {
            let pairs: Vec<(f64, f64, Option<f64>)> = cr
                .runs
                .iter()
                .filter(|r| r.method == m)
                .filter_map(|r| {
                    let e0 = r.epochs.first()?;
                    Some((r.pre_insertion, e0.old_entities?, e0.new_entities))
                })
                .collect();
            let pre: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let old: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let drops: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
            let rel: Vec<f64> = pairs.iter().map(|p| (p.0 - p.1) / p.0).collect();
            let new: Vec<f64> = pairs.iter().filter_map(|p| p.2).collect();
            Some(CorruptionRow {
                method: m,
                replicates: pairs.len(),
                pre_insertion: mean(&pre)?,
                epoch0_old_entities: mean(&old)?,
                drop: mean(&drops)?,
                relative_drop: mean(&rel)?,
                epoch0_new_entities: mean(&new),
            })
        })
        .collect()
}

/// Loads the plan's data and reports mean epoch-0 MRR* per method and size.
pub fn experiment_immediate(plan: &ExperimentPlan) -> Result<Vec<ImmediateRow>> {
    let data = plan.load_data()?;
    Ok(immediate_table(&run_main(plan, &data, false, false)?))
}

/// Loads the plan's data and reports epochs-to-convergence per method.
pub fn experiment_convergence(plan: &ExperimentPlan) -> Result<Vec<ConvergenceRow>> {
    let data = plan.load_data()?;
    Ok(convergence_table(&run_main(plan, &data, true, true)?))
}

/// Loads both graphs and reports the old-entity MRR* drop per method.
pub fn experiment_corruption(plan: &ExperimentPlan) -> Result<Vec<CorruptionRow>> {
    let data = plan.load_data()?;
    let deployment = plan.load_deployment()?;
    Ok(corruption_table(&run_corruption(plan, &data, &deployment)?))
}

/// Loads the plan's data and sweeps the indicator-set size.
pub fn sensitivity_sweep(plan: &ExperimentPlan, k_values: &[usize]) -> Result<(Vec<SweepRow>, Vec<SweepTrend>)> {
    let data = plan.load_data()?;
    let rows = sweep_table(&run_sweep(plan, &data, k_values)?);
    let trends = sweep_trends(&rows);
    Ok((rows, trends))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

const EPOCH_HEADER: &str = "epoch,method,ookb_size,replicate,mrr_star,mrr_star_old_entities,mrr_star_new_entities\n";

fn epoch_line(out: &mut String, m: &EpochMetrics, method: impl std::fmt::Display, size: usize, replicate: usize) {
    let _ = writeln!(
        out,
        "{},{method},{size},{replicate},{},{},{}",
        m.epoch,
        opt(m.all),
        opt(m.old_entities),
        opt(m.new_entities)
    );
}

/// Per-epoch log of every run.
pub fn epochs_csv(rs: &RunSet) -> String {
    let mut out = String::from(EPOCH_HEADER);
    for r in &rs.runs {
        for m in &r.epochs {
            epoch_line(&mut out, m, r.variant.method, r.ookb_size, r.replicate);
        }
    }
    out
}

pub fn ookb_sets_csv(kg: &KnowledgeGraph, sets: &[OokbSet]) -> String {
    let mut out = String::from("ookb_size,replicate,seed,entities\n");
    for s in sets {
        let names: Vec<&str> = s.entities.iter().map(|e| kg.entities.name(e.index())).collect();
        let _ = writeln!(out, "{},{},{},{}", s.ookb_size, s.replicate, s.seed, names.join(";"));
    }
    out
}

pub fn failures_csv(failures: &[ReplicateFailure]) -> String {
    let mut out = String::from("ookb_size,replicate,method,error\n");
    for f in failures {
        let msg = f.message.replace(['"', '\n'], " ");
        let method = f.method.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{method},\"{msg}\"", f.ookb_size, f.replicate);
    }
    out
}

pub fn immediate_csv(rows: &[ImmediateRow]) -> String {
    let mut out = String::from("method,ookb_size,replicates,mean_mrr_star,std_mrr_star,mean_old_entities,mean_new_entities\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{}",
            r.method,
            r.ookb_size,
            r.replicates,
            r.mean_mrr_star,
            r.std_mrr_star,
            opt(r.mean_old_entities),
            opt(r.mean_new_entities)
        );
    }
    out
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("method,replicates,mean_epochs,std_epochs,not_converged\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{}",
            r.method, r.replicates, r.mean_epochs, r.std_epochs, r.not_converged
        );
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("method,k,replicates,mean_immediate,mean_epochs,std_epochs,not_converged\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{},{:.6},{}",
            r.method,
            r.k,
            r.replicates,
            r.mean_immediate,
            opt(r.mean_epochs),
            r.std_epochs,
            r.not_converged
        );
    }
    out
}

pub fn sweep_trend_csv(trends: &[SweepTrend]) -> String {
    let mut out =
        String::from("method,spearman_epochs_vs_k,best_k,immediate_at_best_k,largest_k,immediate_at_largest_k\n");
    for t in trends {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{},{:.6}",
            t.method,
            opt(t.epochs_vs_k),
            t.best_k,
            t.immediate_at_best_k,
            t.largest_k,
            t.immediate_at_largest_k
        );
    }
    out
}

pub fn corruption_csv(rows: &[CorruptionRow]) -> String {
    let mut out = String::from(
        "method,replicates,pre_insertion,epoch0_old_entities,drop,relative_drop,epoch0_new_entities\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.method,
            r.replicates,
            r.pre_insertion,
            r.epoch0_old_entities,
            r.drop,
            r.relative_drop,
            opt(r.epoch0_new_entities)
        );
    }
    out
}

pub fn corruption_epochs_csv(cr: &CorruptionRuns) -> String {
    let mut out = String::from(EPOCH_HEADER);
    for r in &cr.runs {
        let size = cr.inserted[r.replicate].len();
        for m in &r.epochs {
            epoch_line(&mut out, m, r.method, size, r.replicate);
        }
    }
    out
}

/// Whitespace-separated mean curves, one column per series; `NaN` where no
/// run reached an epoch.
fn curves_dat(title: &str, series: &[(String, Vec<Vec<f64>>)]) -> String {
    let len = series.iter().map(|(_, rows)| rows.len()).max().unwrap_or(0);
    let mut out = format!("# {title}\n# epoch");
    for (name, _) in series {
        let _ = write!(out, " {name}");
    }
    out.push('\n');
    for e in 0..len {
        let _ = write!(out, "{e}");
        for (_, rows) in series {
            match rows.get(e).and_then(|v| mean(v)) {
                Some(m) => {
                    let _ = write!(out, " {m:.6}");
                }
                None => out.push_str(" NaN"),
            }
        }
        out.push('\n');
    }
    out
}

fn push_at(rows: &mut Vec<Vec<f64>>, epoch: usize, v: Option<f64>) {
    if rows.len() <= epoch {
        rows.resize(epoch + 1, Vec::new());
    }
    if let Some(v) = v {
        rows[epoch].push(v);
    }
}

/// Mean MRR* learning curves of one OOKB size, one column per method.
pub fn learning_curves_dat(rs: &RunSet, ookb_size: usize) -> String {
    let series: Vec<(String, Vec<Vec<f64>>)> = rs
        .variants
        .iter()
        .map(|v| {
            let mut rows = Vec::new();
            for r in rs.runs.iter().filter(|r| r.variant == *v && r.ookb_size == ookb_size) {
                for m in &r.epochs {
                    push_at(&mut rows, m.epoch, m.all);
                }
            }
            (v.method.to_string(), rows)
        })
        .collect();
    curves_dat(&format!("mean MRR* per epoch, {ookb_size} OOKB entities"), &series)
}

pub fn corruption_curves_dat(cr: &CorruptionRuns) -> String {
    let series: Vec<(String, Vec<Vec<f64>>)> = cr
        .methods
        .iter()
        .map(|&m| {
            let mut rows = Vec::new();
            for r in cr.runs.iter().filter(|r| r.method == m) {
                for e in &r.epochs {
                    push_at(&mut rows, e.epoch, e.old_entities);
                }
            }
            (m.to_string(), rows)
        })
        .collect();
    curves_dat("mean old-entity MRR* per epoch after insertion", &series)
}

/// Writes `ookb_sets.csv`, `epochs.csv`, `immediate.csv`,
/// `convergence.csv` (when a joint model was trained), `failures.csv` and
/// one `curves_ookb<size>.dat` per size.
pub fn write_main_outputs(dir: &Path, kg: &KnowledgeGraph, rs: &RunSet) -> Result<Vec<PathBuf>> {
    let mut written = vec![
        write_file(dir, "ookb_sets.csv", &ookb_sets_csv(kg, &rs.sets))?,
        write_file(dir, "epochs.csv", &epochs_csv(rs))?,
        write_file(dir, "immediate.csv", &immediate_csv(&immediate_table(rs)))?,
    ];
    let conv = convergence_table(rs);
    if !conv.is_empty() {
        written.push(write_file(dir, "convergence.csv", &convergence_csv(&conv))?);
    }
    written.push(write_file(dir, "failures.csv", &failures_csv(&rs.failures))?);
    for size in rs.sizes() {
        written.push(write_file(dir, &format!("curves_ookb{size}.dat"), &learning_curves_dat(rs, size))?);
    }
    Ok(written)
}

/// Writes `corruption.csv`, `corruption_epochs.csv`, `corruption_sets.csv`,
/// `corruption_failures.csv` and `corruption_curves.dat`.
pub fn write_corruption_outputs(dir: &Path, cr: &CorruptionRuns) -> Result<Vec<PathBuf>> {
    let mut sets = String::from("replicate,entities\n");
    for (r, names) in cr.inserted.iter().enumerate() {
        let _ = writeln!(sets, "{r},{}", names.join(";"));
    }
    Ok(vec![
        write_file(dir, "corruption.csv", &corruption_csv(&corruption_table(cr)))?,
        write_file(dir, "corruption_epochs.csv", &corruption_epochs_csv(cr))?,
        write_file(dir, "corruption_sets.csv", &sets)?,
        write_file(dir, "corruption_failures.csv", &failures_csv(&cr.failures))?,
        write_file(dir, "corruption_curves.dat", &corruption_curves_dat(cr))?,
    ])
}

/// Writes `sweep.csv`, `sweep_trend.csv` and `sweep_failures.csv`.
pub fn write_sweep_outputs(dir: &Path, rs: &RunSet) -> Result<Vec<PathBuf>> {
    let rows = sweep_table(rs);
    Ok(vec![
        write_file(dir, "sweep.csv", &sweep_csv(&rows))?,
        write_file(dir, "sweep_trend.csv", &sweep_trend_csv(&sweep_trends(&rows)))?,
        write_file(dir, "sweep_failures.csv", &failures_csv(&rs.failures))?,
    ])
}

/// Runs the main and corruption experiments of a plan and writes every
/// output under its output directory. Returns the files written.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<PathBuf>> {
    let data = plan.load_data()?;
    let main = run_main(plan, &data, true, true)?;
    let mut written = write_main_outputs(&plan.output_dir, &data.kg, &main)?;
    let deployment = plan.load_deployment()?;
    let corruption = run_corruption(plan, &data, &deployment)?;
    written.extend(write_corruption_outputs(&plan.output_dir, &corruption)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_handles_ties_and_constants() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), None);
        assert_eq!(average_ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(r > 0.9 && r < 1.0);
    }

    #[test]
    fn std_dev_is_sample_based() {
        assert_eq!(std_dev(&[3.0]), 0.0);
        assert!((std_dev(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-12);
    }

    fn tiny_kg(triples: &[(&str, &str, &str, u64)]) -> KnowledgeGraph {
        let mut kg = KnowledgeGraph::new();
        for (h, r, t, c) in triples {
            kg.add_named(h, r, t, *c);
        }
        kg
    }

    #[test]
    fn deployment_entities_join_base_vocabulary() {
        let base = tiny_kg(&[("cup", "atLocation", "shelf", 4)]);
        let dep = tiny_kg(&[
            ("jar", "atLocation", "shelf", 6),
            ("jar", "atLocation", "crate", 2),
            ("crate", "atLocation", "shelf", 3),
            ("cup", "atLocation", "shelf", 9),
        ]);
        let cands = deployment_candidates(&base, &dep);
        assert_eq!(cands, vec![("jar".to_owned(), 6), ("crate".to_owned(), 3)]);

        let (merged, ids) = merge_for_insertion(&base, &dep, &["jar".to_owned()]).unwrap();
        assert_eq!(merged.triples.len(), 2, "crate is neither known nor inserted");
        assert_eq!(merged.entities.name(ids[0].index()), "jar");
        assert_eq!(merged.triples.count(&Triple::new(0usize, 0usize, 1usize)), 4, "base counts unchanged");
    }

    use crate::kg::Triple;

    #[test]
    fn ookb_sets_are_reproducible_and_sized() {
        let kg = tiny_kg(&[
            ("a", "r", "b", 7),
            ("c", "r", "b", 7),
            ("d", "r", "b", 1),
            ("e", "r", "a", 7),
        ]);
        let sets = record_ookb_sets(&kg, &[1, 2], 3, 6, 42).unwrap();
        assert_eq!(sets.len(), 6);
        assert_eq!(sets, record_ookb_sets(&kg, &[1, 2], 3, 6, 42).unwrap());
        let d = kg.entity_id("d").unwrap();
        for s in &sets {
            assert!(!s.entities.contains(&d), "d has a single observation");
        }
        assert!(sets.iter().all(|s| s.entities.len() == s.ookb_size));
    }
}
