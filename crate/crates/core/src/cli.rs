//! Command-line front end.
//!
//! Exit codes: 0 success, 1 other failure (I/O, invalid arguments),
//! 2 usage error or unreadable/invalid config, 3 training failure (records
//! written so far are kept), 4 empty selection.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entanglement::{
    ConfigDescriptor, EntanglementMatrix, Origin, SamplingMode, SamplingSpec, TopologyKind,
};
use crate::error::Error;
use crate::experiment::{
    self, baseline_seed, ensemble_vote, prepare, read_records, report, run_baseline, run_search,
    run_seed, run_single, top_r_select, write_records, CellSpec, Checkpoint, Criterion,
    EnsembleSummary, Prepared, RunOutput, RunRecord, SearchConfig,
};
use crate::features::{FeatureTable, SyntheticSpec, DEFAULT_PCA_DIM};
use crate::nnet::{Model, TrainConfig};

pub const SEED_ENV: &str = "ENTANGLE_SEED";
pub const CONFIG_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;
pub const EXIT_EMPTY_SELECTION: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "qentangle",
    version,
    about = "Stochastic entanglement-configuration search"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one entanglement matrix.
    Sample(SampleArgs),
    /// Emit a conventional topology.
    Topology(TopologyArgs),
    /// Write a synthetic feature table.
    Synthesize(SynthesizeArgs),
    /// Train one dressed net on a given matrix.
    Train(TrainArgs),
    /// Train the classical baseline.
    Baseline(ConfigArgs),
    /// Run every configured cell plus the baseline.
    Search(SearchArgs),
    /// Top-r% majority-vote ensembles over search results.
    Ensemble(EnsembleArgs),
    /// Summary JSON and plot-ready CSVs.
    Report(ConfigArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Unconstrained,
    Constrained,
    SemiConstrained,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long = "n-q", default_value_t = 8)]
    pub n_q: usize,
    /// Inferred from --k / --e / --k-max when omitted.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "e")]
    pub e: Option<usize>,
    #[arg(long = "k-max")]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV path; the JSON descriptor goes next to it with a .json extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    /// ring, nn | nearest-neighbor, none, full
    #[arg(long)]
    pub kind: String,
    #[arg(long = "n-q", default_value_t = 8)]
    pub n_q: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long, default_value_t = 100)]
    pub samples_per_class: usize,
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    #[arg(long, default_value_t = 2.5)]
    pub separation: f64,
    #[arg(long, default_value_t = 20)]
    pub patients_per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides ENTANGLE_SEED and the config's master_seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Matrix as CSV or JSON descriptor.
    #[arg(long)]
    pub beta: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Concurrent runs; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Percentages to ensemble; defaults to the config's `ensemble_top_r`.
    #[arg(long = "top-r", num_args = 1..)]
    pub top_r: Vec<f64>,
}

/// The JSON experiment file driving train/baseline/search/ensemble/report.
/// Relative paths resolve against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default = "default_pca_dim")]
    pub pca_dim: usize,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    #[serde(default = "default_n_q")]
    pub n_q: usize,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub conventional: Vec<TopologyKind>,
    #[serde(default = "default_top_r")]
    pub ensemble_top_r: Vec<f64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_pca_dim() -> usize {
    DEFAULT_PCA_DIM
}

fn default_split() -> [f64; 3] {
    [0.5, 0.25, 0.25]
}

fn default_n_q() -> usize {
    8
}

fn default_top_r() -> Vec<f64> {
    vec![1.0, 5.0, 10.0, 20.0, 30.0, 100.0]
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn config(e: impl std::fmt::Display) -> Self {
        Self::new(EXIT_CONFIG, format!("config: {e}"))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(EXIT_FAILURE, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(CliError::config)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(d) = &cfg.dataset {
            cfg.dataset = Some(base.join(d));
        }
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> CliResult<()> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::config(format!(
                "unsupported version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        match (&self.dataset, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "give either `dataset` or `synthetic`, not both",
                ))
            }
            (None, None) => {
                return Err(CliError::config(
                    "one of `dataset` or `synthetic` is required",
                ))
            }
            (Some(p), None) if !p.exists() => {
                return Err(CliError::config(format!(
                    "dataset {} does not exist",
                    p.display()
                )))
            }
            _ => {}
        }
        self.search_config(self.master_seed)
            .check()
            .map_err(CliError::config)?;
        if self
            .ensemble_top_r
            .iter()
            .any(|r| !(*r > 0.0 && *r <= 100.0))
        {
            return Err(CliError::config(
                "ensemble_top_r entries must lie in (0, 100]",
            ));
        }
        Ok(())
    }

    pub fn search_config(&self, master_seed: u64) -> SearchConfig {
        SearchConfig {
            n_q: self.n_q,
            cells: self.cells.clone(),
            conventional: self.conventional.clone(),
            master_seed,
            train: self.train,
        }
    }

    fn table(&self) -> CliResult<FeatureTable> {
        match (&self.dataset, &self.synthetic) {
            (Some(p), _) => FeatureTable::load(p).map_err(CliError::config),
            (None, Some(s)) => s.generate().map_err(CliError::config),
            (None, None) => Err(CliError::config("no dataset")),
        }
    }

    /// Split and project the dataset; the split seed derives from the
    /// master seed so every command sees the same partition.
    pub fn prepare(&self, master_seed: u64) -> CliResult<Prepared> {
        let table = self.table()?;
        prepare(&table, self.pca_dim, self.split, split_seed(master_seed)).map_err(CliError::config)
    }
}

/// Seed of the patient-wise split for a master seed.
pub fn split_seed(master: u64) -> u64 {
    run_seed(master, u64::MAX - 1, 0)
}

/// Flag, then `ENTANGLE_SEED`, then the config value.
pub fn resolve_seed(flag: Option<u64>, config: u64) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(config),
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Sample(a) => cmd_sample(a),
        Command::Topology(a) => cmd_topology(a),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Train(a) => cmd_train(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Search(a) => cmd_search(a),
        Command::Ensemble(a) => cmd_ensemble(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::new(EXIT_CONFIG, msg)
}

fn sampling_mode(a: &SampleArgs) -> CliResult<SamplingMode> {
    let given = [a.k.is_some(), a.e.is_some(), a.k_max.is_some()]
        .iter()
        .filter(|b| **b)
        .count();
    if given > 1 {
        return Err(usage(
            "conflicting mode flags: give exactly one of --k, --e, --k-max",
        ));
    }
    let mode = match a.mode {
        Some(m) => m,
        None if a.k.is_some() => ModeArg::Constrained,
        None if a.e.is_some() => ModeArg::Unconstrained,
        None if a.k_max.is_some() => ModeArg::SemiConstrained,
        None => return Err(usage("missing --mode and one of --k, --e, --k-max")),
    };
    match (mode, a.k, a.e, a.k_max) {
        (ModeArg::Constrained, Some(k), None, None) => Ok(SamplingMode::Constrained { k }),
        (ModeArg::Unconstrained, None, Some(e), None) => Ok(SamplingMode::Unconstrained { e }),
        (ModeArg::SemiConstrained, None, None, Some(k_max)) => {
            Ok(SamplingMode::SemiConstrained { k_max })
        }
        (ModeArg::Constrained, ..) => Err(usage("--mode constrained takes --k")),
        (ModeArg::Unconstrained, ..) => Err(usage("--mode unconstrained takes --e")),
        (ModeArg::SemiConstrained, ..) => Err(usage("--mode semi-constrained takes --k-max")),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e).into())
}

fn emit_matrix(m: &EntanglementMatrix, d: &ConfigDescriptor, out: Option<&Path>) -> CliResult<()> {
    let counts: Vec<String> = m.row_counts().iter().map(usize::to_string).collect();
    say(&format!(
        "n_q={}\nE={}\nmu={:.4}\nrow_counts={}\n",
        m.n_q(),
        m.total_entanglements(),
        m.density()?,
        counts.join(",")
    ));
    match out {
        Some(path) => {
            write_file(path, &m.to_csv())?;
            let json = serde_json::to_string_pretty(d).map_err(Error::from)? + "\n";
            write_file(&path.with_extension("json"), &json)?;
        }
        None => say(&m.to_csv()),
    }
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> CliResult<()> {
    let mode = sampling_mode(&a)?;
    let spec = SamplingSpec::new(a.n_q, mode).map_err(|e| usage(e.to_string()))?;
    let seed = resolve_seed(a.seed, 0)?;
    let m = spec.sample(&mut ChaCha8Rng::seed_from_u64(seed))?;
    let d = ConfigDescriptor::new(&m, mode.into(), Some(seed));
    emit_matrix(&m, &d, a.out.as_deref())
}

fn cmd_topology(a: TopologyArgs) -> CliResult<()> {
    let kind: TopologyKind = a.kind.parse().map_err(|e: Error| usage(e.to_string()))?;
    let m = kind.build(a.n_q).map_err(|e| usage(e.to_string()))?;
    let d = ConfigDescriptor::new(&m, Origin::Topology { kind }, None);
    emit_matrix(&m, &d, a.out.as_deref())
}

fn cmd_synthesize(a: SynthesizeArgs) -> CliResult<()> {
    let spec = SyntheticSpec {
        samples_per_class: a.samples_per_class,
        dim: a.dim,
        separation: a.separation,
        patients_per_class: a.patients_per_class,
        seed: a.seed,
    };
    let table = spec.generate().map_err(|e| usage(e.to_string()))?;
    write_file(&a.out, &table.to_csv_string()?)
}

fn load_beta(path: &Path) -> CliResult<ConfigDescriptor> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let d: ConfigDescriptor = serde_json::from_str(&text).map_err(CliError::config)?;
        d.matrix().map_err(CliError::config)?;
        Ok(d)
    } else {
        let m = EntanglementMatrix::parse_csv(&text).map_err(CliError::config)?;
        Ok(ConfigDescriptor::new(&m, Origin::Explicit, None))
    }
}

fn checkpoint(out: &RunOutput, cfg: &TrainConfig) -> Option<Checkpoint> {
    Some(Checkpoint {
        run_id: out.record.run_id.clone(),
        model: out.model.clone()?,
        train_config: TrainConfig {
            seed: out.record.seed,
            ..*cfg
        },
        history: out.history.clone()?,
    })
}

fn checkpoint_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join("checkpoints").join(format!("{run_id}.json"))
}

fn save_outputs(dir: &Path, outs: &[RunOutput], cfg: &TrainConfig) -> CliResult<()> {
    fs::create_dir_all(dir.join("checkpoints")).map_err(|e| Error::io(dir, e))?;
    for out in outs {
        if let Some(ck) = checkpoint(out, cfg) {
            ck.save(checkpoint_path(dir, &out.record.run_id))?;
        }
    }
    Ok(())
}

fn failures(records: &[&RunRecord]) -> CliResult<()> {
    let failed: Vec<String> = records
        .iter()
        .filter(|r| !r.is_ok())
        .map(|r| {
            format!(
                "{}: {}",
                r.run_id,
                r.error.as_deref().unwrap_or("unknown error")
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(
            EXIT_TRAINING,
            format!("{} run(s) failed: {}", failed.len(), failed.join("; ")),
        ))
    }
}

/// Writes to stdout, treating a closed pipe as success.
fn say(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &serde_json::Value) {
    say(&format!("{v}\n"));
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let cfg = ExperimentConfig::load(&a.common.config)?;
    let seed = resolve_seed(a.common.seed, cfg.master_seed)?;
    let beta = load_beta(&a.beta)?;
    let prep = cfg.prepare(cfg.master_seed)?;
    let run_id = format!("train-s{seed}");
    let out = run_single(&run_id, "single", &beta, seed, &prep.data, &cfg.train);
    let dir = &cfg.output_dir;
    save_outputs(dir, std::slice::from_ref(&out), &cfg.train)?;
    write_records(
        dir.join(format!("{run_id}.jsonl")),
        std::slice::from_ref(&out.record),
    )?;
    failures(&[&out.record])?;
    print_json(&serde_json::json!({
        "run_id": run_id,
        "val_accuracy": out.record.val_accuracy,
        "test_accuracy": out.record.test_accuracy,
    }));
    Ok(())
}

fn baseline_output(cfg: &ExperimentConfig, master: u64, prep: &Prepared) -> CliResult<RunOutput> {
    let out = run_baseline(cfg.n_q, baseline_seed(master), &prep.data, &cfg.train);
    let dir = &cfg.output_dir;
    save_outputs(dir, std::slice::from_ref(&out), &cfg.train)?;
    let json = serde_json::to_string_pretty(&out.record).map_err(Error::from)? + "\n";
    write_file(&dir.join("baseline.json"), &json)?;
    Ok(out)
}

fn cmd_baseline(a: ConfigArgs) -> CliResult<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let master = resolve_seed(a.seed, cfg.master_seed)?;
    let prep = cfg.prepare(master)?;
    let out = baseline_output(&cfg, master, &prep)?;
    failures(&[&out.record])?;
    print_json(&serde_json::json!({
        "val_accuracy": out.record.val_accuracy,
        "test_accuracy": out.record.test_accuracy,
    }));
    Ok(())
}

fn cmd_search(a: SearchArgs) -> CliResult<()> {
    let cfg = ExperimentConfig::load(&a.common.config)?;
    let master = resolve_seed(a.common.seed, cfg.master_seed)?;
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let prep = cfg.prepare(master)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let pca = serde_json::to_string_pretty(&prep.pca).map_err(Error::from)? + "\n";
    write_file(&dir.join("pca.json"), &pca)?;

    log::info!("baseline");
    let baseline = baseline_output(&cfg, master, &prep)?;
    let search = cfg.search_config(master);
    log::info!("search: {} runs on {jobs} thread(s)", search.total_runs());
    let outs = run_search(&search, &prep.data, jobs).map_err(CliError::config)?;
    save_outputs(dir, &outs, &cfg.train)?;
    let records: Vec<RunRecord> = outs.iter().map(|o| o.record.clone()).collect();
    write_records(dir.join("records.jsonl"), &records)?;

    let mut all: Vec<&RunRecord> = records.iter().collect();
    all.push(&baseline.record);
    failures(&all)?;
    let sampled: Vec<RunRecord> = records
        .iter()
        .filter(|r| !matches!(r.origin(), Some(Origin::Topology { .. })))
        .cloned()
        .collect();
    let constructive = if baseline.record.is_ok() {
        experiment::constructive_subspace(&sampled, &baseline.record, Criterion::Test).len()
    } else {
        0
    };
    print_json(&serde_json::json!({
        "records": records.len(),
        "baseline_test_accuracy": baseline.record.test_accuracy,
        "constructive": constructive,
        "output_dir": dir,
    }));
    Ok(())
}

fn load_search_results(dir: &Path) -> CliResult<(Vec<RunRecord>, Option<RunRecord>)> {
    let records = read_records(dir.join("records.jsonl"))?;
    let baseline_path = dir.join("baseline.json");
    let baseline = if baseline_path.exists() {
        let text = fs::read_to_string(&baseline_path).map_err(|e| Error::io(&baseline_path, e))?;
        Some(serde_json::from_str(&text).map_err(Error::from)?)
    } else {
        None
    };
    Ok((records, baseline))
}

fn cmd_ensemble(a: EnsembleArgs) -> CliResult<()> {
    let cfg = ExperimentConfig::load(&a.common.config)?;
    let master = resolve_seed(a.common.seed, cfg.master_seed)?;
    let top_r = if a.top_r.is_empty() {
        cfg.ensemble_top_r.clone()
    } else {
        a.top_r.clone()
    };
    if top_r.iter().any(|r| !(*r > 0.0 && *r <= 100.0)) {
        return Err(usage("--top-r values must lie in (0, 100]"));
    }
    let dir = &cfg.output_dir;
    let (records, _) = load_search_results(dir)?;
    let prep = cfg.prepare(master)?;

    // Cells in first-appearance order; conventional topologies are single runs.
    let mut cells: Vec<&str> = Vec::new();
    let mut by_cell: BTreeMap<&str, Vec<RunRecord>> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| !matches!(r.origin(), Some(Origin::Topology { .. })))
    {
        if !by_cell.contains_key(r.cell.as_str()) {
            cells.push(&r.cell);
        }
        by_cell.entry(&r.cell).or_default().push(r.clone());
    }

    let mut summaries = Vec::new();
    for cell in cells {
        for &r in &top_r {
            let chosen = top_r_select(&by_cell[cell], r).map_err(|e| {
                CliError::new(EXIT_EMPTY_SELECTION, format!("cell {cell:?}, r = {r}: {e}"))
            })?;
            let models = chosen
                .iter()
                .map(|rec| Ok(Checkpoint::load(checkpoint_path(dir, &rec.run_id))?.model))
                .collect::<CliResult<Vec<Model>>>()?;
            let members: Vec<(&str, &Model)> = chosen
                .iter()
                .map(|rec| rec.run_id.as_str())
                .zip(models.iter())
                .collect();
            let result = ensemble_vote(&members, &prep.data.test)?;
            summaries.push(EnsembleSummary {
                cell: cell.to_string(),
                r,
                members: result.members,
                test_accuracy: result.accuracy,
            });
        }
    }
    if summaries.is_empty() {
        return Err(CliError::new(
            EXIT_EMPTY_SELECTION,
            "no records to ensemble",
        ));
    }
    let json = serde_json::to_string_pretty(&summaries).map_err(Error::from)? + "\n";
    write_file(&dir.join("ensembles.json"), &json)?;
    print_json(&serde_json::json!({ "ensembles": summaries.len() }));
    Ok(())
}

fn cmd_report(a: ConfigArgs) -> CliResult<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let dir = &cfg.output_dir;
    let (records, baseline) = load_search_results(dir)?;
    let ens_path = dir.join("ensembles.json");
    let ensembles: Vec<EnsembleSummary> = if ens_path.exists() {
        let text = fs::read_to_string(&ens_path).map_err(|e| Error::io(&ens_path, e))?;
        serde_json::from_str(&text).map_err(Error::from)?
    } else {
        Vec::new()
    };
    let rep = report(&records, baseline.as_ref(), &ensembles);
    write_file(&dir.join("report.json"), &rep.to_json()?)?;
    write_file(&dir.join("scatter.csv"), &rep.scatter_csv())?;
    write_file(&dir.join("topr.csv"), &rep.topr_csv())?;
    print_json(&serde_json::json!({
        "cells": rep.cells.len(),
        "report": dir.join("report.json"),
    }));
    Ok(())
}
