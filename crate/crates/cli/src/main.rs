use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use isi::eval::{Evaluator, QueryWeighting, Restriction};
use isi::harness::experiment::{run_experiment, run_sweep, write_sweep_outputs};
use isi::harness::plan::ExperimentPlan;
use isi::harness::session::ModelConfig;
use isi::harness::synth::{generate_synthetic_kg, generate_word_vectors, KgStats, SyntheticKgSpec};
use isi::init::{initialize_ookb, InitConfig, InitMethod, OokbEntity};
use isi::kg::{load_triples, split_for_session, CountedTripleSet, DatasetSplit, KnowledgeGraph, SplitRatios, Triple};
use isi::model::EmbeddingModel;
use isi::train::{train, EpochControl, TrainConfig};
use isi::wordvec::load_word_vectors;

#[derive(Debug, Parser)]
#[command(name = "isi", version, about = "Knowledge-graph embeddings with informed initialization of new entities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic household knowledge graph as a triple TSV.
    GenerateData(GenerateArgs),
    /// Train an embedding on a triple TSV and write a checkpoint.
    Train(TrainArgs),
    /// Append new entities to a trained model.
    Insert(InsertArgs),
    /// Filtered MRR* of a model on a triple TSV.
    Evaluate(EvaluateArgs),
    /// Run the immediate, convergence and corruption experiments of a plan.
    Experiment(ExperimentArgs),
    /// Sweep the indicator-set size.
    Sweep(SweepArgs),
    /// Print the summary CSVs of a results directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// `default`, `deployment`, or a TOML spec file.
    #[arg(long, default_value = "default")]
    spec: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write synthetic word vectors for the spec's entity names.
    #[arg(long)]
    word_vectors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// TOML with optional `[model]`, `[split]` and `[train]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_model: PathBuf,
    /// Directory for the train/valid/test TSVs actually used.
    #[arg(long)]
    split_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct InsertArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: InitMethod,
    /// One entity name per line.
    #[arg(long)]
    ookb_list: PathBuf,
    #[arg(long)]
    word_vectors: Option<PathBuf>,
    /// Triples linking the new entities to known ones (TSV).
    #[arg(long)]
    insert_triples: Option<PathBuf>,
    /// Indicator-set size for the chosen method.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out_model: PathBuf,
    /// Per-entity initialization report (TSV).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Test triples.
    #[arg(long)]
    data: PathBuf,
    /// Known triples removed before ranking; repeatable.
    #[arg(long)]
    filter: Vec<PathBuf>,
    /// Only score test triples whose endpoints are all listed (one name per line).
    #[arg(long)]
    restrict_entities: Option<PathBuf>,
    #[arg(long)]
    uniform_weights: bool,
    /// Per-query results as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// `default` or a TOML plan file.
    #[arg(long, default_value = "default")]
    plan: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "default")]
    plan: String,
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, default_value = "results")]
    dir: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainFile {
    model: ModelConfig,
    split: SplitRatios,
    train: TrainConfig,
}

fn parse_method(s: &str) -> std::result::Result<InitMethod, String> {
    s.parse().map_err(|e: isi::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<isi::Error>() {
        Some(isi::Error::Numerical(_)) | Some(isi::Error::Sampling(_)) => 3,
        _ => 2,
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenerateData(a) => generate(a),
        Command::Train(a) => train_cmd(a),
        Command::Insert(a) => insert(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    }
}

fn load_spec(s: &str) -> Result<SyntheticKgSpec> {
    Ok(match s {
        "default" => SyntheticKgSpec::default(),
        "deployment" => SyntheticKgSpec::deployment(),
        path => SyntheticKgSpec::load(path)?,
    })
}

fn generate(a: GenerateArgs) -> Result<()> {
    let spec = load_spec(&a.spec)?;
    let kg = generate_synthetic_kg(&spec, a.seed)?;
    kg.save_tsv(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.word_vectors {
        generate_word_vectors(&spec, a.seed)?
            .save(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let s = KgStats::of(&kg);
    println!(
        "entities {}\nrelations {}\nunique_triples {}\ntotal_observations {}",
        s.entities, s.relations, s.unique_triples, s.total_observations
    );
    if !s.within_tolerance(&spec) {
        warn!(
            "counts are outside the spec tolerance (targets {} unique, {} total)",
            spec.target_unique, spec.target_total
        );
    }
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let tf: TrainFile = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).map_err(|e| isi::Error::Config(format!("{}: {e}", p.display())))?
        }
        None => TrainFile::default(),
    };
    let layout = tf.model.layout()?;
    let kg = load_triples(&a.data)?;
    let split = split_for_session(&kg, &[], tf.split, a.seed)?.d0;
    if let Some(dir) = &a.split_dir {
        fs::create_dir_all(dir)?;
        for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
            to_graph(&split, part).save_tsv(dir.join(format!("{name}.tsv")))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut model = EmbeddingModel::random(layout, split.entities.clone(), split.relations.clone(), &mut rng);
    let cfg = TrainConfig { seed: a.seed, ..tf.train };
    let log = train(&mut model, &split, &cfg, |e, _| {
        if e % 10 == 0 {
            info!("epoch {e}");
        }
        EpochControl::Continue
    })?;
    if let Some(last) = log.epochs.last() {
        info!("epoch {}: mean loss {:.6}", last.epoch, last.mean_loss);
    }
    let eval = Evaluator::new(&split, &split.all(), QueryWeighting::Count).evaluate(&model, Restriction::All);
    match eval.percent() {
        Some(m) => info!("test MRR* {m:.2}"),
        None => info!("no test triples to evaluate"),
    }
    model.save(&a.out_model)?;
    Ok(())
}

fn to_graph(split: &DatasetSplit, part: &CountedTripleSet) -> KnowledgeGraph {
    let mut kg = KnowledgeGraph::new();
    for (t, c) in part.iter() {
        kg.add_named(
            split.entities.name(t.head.index()),
            split.relations.name(t.relation.index()),
            split.entities.name(t.tail.index()),
            c,
        );
    }
    kg
}

fn read_names(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

/// Maps a named graph onto `model`'s ids; `extra` names follow the model's
/// own entities in order.
fn to_model_ids(kg: &KnowledgeGraph, model: &EmbeddingModel, extra: &[String], origin: &Path) -> Result<CountedTripleSet> {
    let known = model.num_entities();
    let entity = |name: &str| -> Result<usize> {
        if let Some(i) = model.entity_names().get(name) {
            return Ok(i);
        }
        match extra.iter().position(|x| x == name) {
            Some(p) => Ok(known + p),
            None => Err(isi::Error::VocabularyMismatch(format!("{}: unknown entity `{name}`", origin.display())).into()),
        }
    };
    let mut out = CountedTripleSet::new();
    for (t, c) in kg.triples.iter() {
        let rel = kg.relations.name(t.relation.index());
        let r = model
            .relation_names()
            .get(rel)
            .ok_or_else(|| isi::Error::VocabularyMismatch(format!("{}: unknown relation `{rel}`", origin.display())))?;
        let h = entity(kg.entities.name(t.head.index()))?;
        let tl = entity(kg.entities.name(t.tail.index()))?;
        out.add(Triple::new(h, r, tl), c);
    }
    Ok(out)
}

fn insert(a: InsertArgs) -> Result<()> {
    let model = EmbeddingModel::load(&a.model)?;
    let names = read_names(&a.ookb_list)?;
    if names.is_empty() {
        bail!(isi::Error::InvalidArgument(format!("{} lists no entities", a.ookb_list.display())));
    }
    let table = a.word_vectors.as_ref().map(load_word_vectors).transpose()?;
    let triples = match &a.insert_triples {
        Some(p) => to_model_ids(&load_triples(p)?, &model, &names, p)?,
        None => CountedTripleSet::new(),
    };
    let mut cfg = InitConfig {
        seed: a.seed,
        ..InitConfig::with_method(a.method)
    };
    if let Some(k) = a.k {
        cfg = cfg.with_k(a.method, k);
    }
    let ookb: Vec<OokbEntity> = names.iter().map(|n| OokbEntity { name: n.clone() }).collect();
    let (next, report) = initialize_ookb(&model, &cfg, &ookb, &triples, table.as_ref())?;
    for r in &report.records {
        if r.used != r.requested {
            warn!("{}: fell back to {} ({})", r.entity, r.used, r.fallbacks.join("; "));
        }
    }
    if let Some(p) = &a.report {
        report.save(p)?;
    }
    next.save(&a.out_model)?;
    info!("inserted {} entities with {}", names.len(), a.method);
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let model = EmbeddingModel::load(&a.model)?;
    let mut test = to_model_ids(&load_triples(&a.data)?, &model, &[], &a.data)?;
    let mut known = CountedTripleSet::new();
    for p in &a.filter {
        known.extend_from(&to_model_ids(&load_triples(p)?, &model, &[], p)?);
    }
    if let Some(p) = &a.restrict_entities {
        let allowed: HashSet<String> = read_names(p)?.into_iter().collect();
        let names = model.entity_names();
        test = test.filtered(|t| allowed.contains(names.name(t.head.index())) && allowed.contains(names.name(t.tail.index())));
    }
    let split = DatasetSplit {
        entities: model.entity_names().clone(),
        relations: model.relation_names().clone(),
        train: known,
        valid: CountedTripleSet::new(),
        test,
    };
    let weighting = if a.uniform_weights {
        QueryWeighting::Uniform
    } else {
        QueryWeighting::Count
    };
    let eval = Evaluator::new(&split, &split.all(), weighting).evaluate(&model, Restriction::All);
    if let Some(p) = &a.out {
        let json = serde_json::to_string_pretty(&eval)?;
        fs::write(p, json).with_context(|| format!("writing {}", p.display()))?;
    }
    match eval.percent() {
        Some(m) => println!("mrr_star {m:.6}\nqueries {}", eval.per_query.len()),
        None => bail!(isi::Error::InvalidArgument("no test triples left to evaluate".into())),
    }
    Ok(())
}

fn load_plan(name: &str, seed: Option<u64>, jobs: Option<usize>, out: Option<PathBuf>) -> Result<ExperimentPlan> {
    let mut plan = ExperimentPlan::load(name)?;
    if let Some(s) = seed {
        plan.seed = s;
    }
    if let Some(j) = jobs {
        plan.jobs = j;
    }
    if let Some(o) = out {
        plan.output_dir = o;
    }
    plan.validate()?;
    Ok(plan)
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let plan = load_plan(&a.plan, a.seed, a.jobs, a.output_dir)?;
    info!("running plan `{}` into {}", plan.name, plan.output_dir.display());
    for p in run_experiment(&plan)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let plan = load_plan(&a.plan, a.seed, a.jobs, a.output_dir)?;
    let ks = a.k_values.unwrap_or_else(|| plan.sweep.k_values.clone());
    let data = plan.load_data()?;
    let rs = run_sweep(&plan, &data, &ks)?;
    for p in write_sweep_outputs(&plan.output_dir, &rs)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let mut found = false;
    for name in ["immediate.csv", "convergence.csv", "corruption.csv", "sweep.csv", "sweep_trend.csv"] {
        let p = a.dir.join(name);
        if !p.exists() {
            continue;
        }
        found = true;
        let text = fs::read_to_string(&p)?;
        println!("== {name}");
        print_table(&text);
        println!();
    }
    if !found {
        bail!(isi::Error::InvalidArgument(format!("no result CSVs in {}", a.dir.display())));
    }
    Ok(())
}

fn print_table(csv: &str) {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0))
        .collect();
    for r in rows {
        let cells: Vec<String> = r.iter().enumerate().map(|(i, s)| format!("{s:>w$}", w = widths[i])).collect();
        println!("{}", cells.join("  ").trim_end());
    }
}
