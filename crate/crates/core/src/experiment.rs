//! Search orchestration: seeded training runs over sampled configurations,
//! the classical baseline, constructive-subspace extraction, top-r%
//! ensembles and the summary report.
//!
//! # Seeds
//!
//! Every run in a search gets `run_seed(master, cell, run)`, built from the
//! SplitMix64 finalizer:
//!
//! ```text
//! run_seed(m, c, r) = mix(mix(mix(m) + c) + r)      (wrapping u64 adds)
//! ```
//!
//! Sampled cells use their position in the config as `c`. Conventional
//! topologies continue the cell numbering after the sampled cells with
//! `r = 0`. The baseline uses `c = u64::MAX, r = 0`. A run seed drives the
//! matrix sampler (ChaCha8, stream 0), model initialization (stream 1) and
//! minibatch shuffling (stream 2).

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{ConfigDescriptor, Origin, SamplingMode, SamplingSpec, TopologyKind};
use crate::error::{Error, Result};
use crate::features::{patient_split, FeatureTable, PcaModel, Split};
use crate::nnet::{
    argmax, evaluate, init_rng, predict_all, train, ClassicalBaseline, Classifier, DressedNet,
    History, LabeledSet, Model, TrainConfig,
};

/// Capture per-epoch theta in run records up to this many qubits.
pub const THETA_HISTORY_MAX_QUBITS: usize = 8;

const BASELINE_CELL: u64 = u64::MAX;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_seed(master: u64, cell: u64, run: u64) -> u64 {
    mix(mix(mix(master).wrapping_add(cell)).wrapping_add(run))
}

pub fn baseline_seed(master: u64) -> u64 {
    run_seed(master, BASELINE_CELL, 0)
}

/// Train/validation/test sets after splitting and PCA.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: LabeledSet,
    pub validation: LabeledSet,
    pub test: LabeledSet,
    pub n_classes: usize,
}

impl Dataset {
    pub fn n_features(&self) -> usize {
        self.train.x.first().map_or(0, Vec::len)
    }

    pub fn split(&self, split: Split) -> Option<&LabeledSet> {
        match split {
            Split::Train => Some(&self.train),
            Split::Validation => Some(&self.validation),
            Split::Test => Some(&self.test),
            Split::Unassigned => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub table: FeatureTable,
    pub pca: PcaModel,
    pub data: Dataset,
}

/// Splits (when the table carries no split tags) patient-wise, fits PCA on
/// the training rows only and projects every split with that one model.
pub fn prepare(
    table: &FeatureTable,
    pca_dim: usize,
    fractions: [f64; 3],
    split_seed: u64,
) -> Result<Prepared> {
    if table.is_empty() {
        return Err(Error::Empty("feature table"));
    }
    let assigned = table
        .splits()
        .iter()
        .filter(|s| **s != Split::Unassigned)
        .count();
    let table = if assigned == 0 {
        patient_split(table, fractions, split_seed)?
    } else if assigned == table.len() {
        table.clone()
    } else {
        return Err(Error::InvalidArgument(
            "feature table has split tags on some rows only".into(),
        ));
    };
    let pca = PcaModel::fit(&table.rows_in(Split::Train), pca_dim)?;
    let project = |split| -> Result<LabeledSet> {
        let raw = table.labeled(split);
        if raw.is_empty() {
            return Err(Error::Empty(match split {
                Split::Train => "training split",
                Split::Validation => "validation split",
                _ => "test split",
            }));
        }
        LabeledSet::new(pca.transform(&raw.x)?, raw.y)
    };
    let data = Dataset {
        train: project(Split::Train)?,
        validation: project(Split::Validation)?,
        test: project(Split::Test)?,
        n_classes: table.labels().iter().max().map_or(2, |m| (m + 1).max(2)),
    };
    Ok(Prepared { table, pca, data })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Dressed,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyHistory {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
}

/// One trained configuration. Failed runs keep their identity with
/// `status = failed`, zero accuracies and the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub cell: String,
    pub kind: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entanglement: Option<ConfigDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub best_epoch: usize,
    pub epochs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_history: Option<AccuracyHistory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_history: Option<Vec<Vec<f64>>>,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    pub fn origin(&self) -> Option<Origin> {
        self.entanglement.as_ref().map(|d| d.origin)
    }

    #[allow(clippy::too_many_arguments)]
    fn failed(
        run_id: String,
        cell: String,
        kind: RunKind,
        entanglement: Option<ConfigDescriptor>,
        mu: Option<f64>,
        seed: u64,
        epochs: usize,
        err: &Error,
        wall_time: f64,
    ) -> Self {
        Self {
            run_id,
            cell,
            kind,
            entanglement,
            mu,
            seed,
            status: RunStatus::Failed,
            error: Some(err.to_string()),
            train_accuracy: 0.0,
            val_accuracy: 0.0,
            test_accuracy: 0.0,
            best_epoch: 0,
            epochs,
            accuracy_history: None,
            theta_history: None,
            wall_time,
        }
    }
}

/// A record together with the model it describes (absent for failed runs).
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub model: Option<Model>,
    pub history: Option<History>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub run_id: String,
    pub model: Model,
    pub train_config: TrainConfig,
    pub history: History,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn finish<M: Classifier>(
    model: M,
    data: &Dataset,
    cfg: &TrainConfig,
    keep_theta: bool,
    mut record: RunRecord,
    started: Instant,
) -> Result<(RunRecord, M, History)> {
    let trained = train(model, &data.train, &data.validation, cfg)?;
    let h = &trained.history;
    record.train_accuracy = h.train_accuracy[h.best_epoch];
    record.val_accuracy = h.val_accuracy[h.best_epoch];
    record.test_accuracy = evaluate(&trained.model, &data.test)?;
    record.best_epoch = h.best_epoch;
    record.accuracy_history = Some(AccuracyHistory {
        train: h.train_accuracy.clone(),
        validation: h.val_accuracy.clone(),
    });
    if keep_theta && !h.theta.is_empty() {
        record.theta_history = Some(h.theta.clone());
    }
    record.wall_time = started.elapsed().as_secs_f64();
    Ok((record, trained.model, trained.history))
}

/// Trains one dressed net on `entanglement` with `seed`; never panics on a
/// training failure, which is reported through `status` instead.
pub fn run_single(
    run_id: &str,
    cell: &str,
    entanglement: &ConfigDescriptor,
    seed: u64,
    data: &Dataset,
    cfg: &TrainConfig,
) -> RunOutput {
    let started = Instant::now();
    let cfg = TrainConfig { seed, ..*cfg };
    let mu = entanglement.matrix().and_then(|m| m.density()).ok();
    let base = RunRecord {
        run_id: run_id.to_string(),
        cell: cell.to_string(),
        kind: RunKind::Dressed,
        entanglement: Some(entanglement.clone()),
        mu,
        seed,
        status: RunStatus::Ok,
        error: None,
        train_accuracy: 0.0,
        val_accuracy: 0.0,
        test_accuracy: 0.0,
        best_epoch: 0,
        epochs: cfg.epochs,
        accuracy_history: None,
        theta_history: None,
        wall_time: 0.0,
    };
    let attempt = || -> Result<(RunRecord, DressedNet, History)> {
        let mut rng = init_rng(seed);
        let net = DressedNet::random(
            data.n_features(),
            data.n_classes,
            entanglement.clone(),
            &mut rng,
        )?;
        let keep = entanglement.n_q <= THETA_HISTORY_MAX_QUBITS;
        finish(net, data, &cfg, keep, base.clone(), started)
    };
    match attempt() {
        Ok((record, net, history)) => RunOutput {
            record,
            model: Some(Model::Dressed(net)),
            history: Some(history),
        },
        Err(e) => RunOutput {
            record: RunRecord::failed(
                base.run_id,
                base.cell,
                RunKind::Dressed,
                base.entanglement,
                mu,
                seed,
                cfg.epochs,
                &e,
                started.elapsed().as_secs_f64(),
            ),
            model: None,
            history: None,
        },
    }
}

/// The classical baseline: same layers with the circuit removed, hidden
/// width `n_q`.
pub fn run_baseline(n_q: usize, seed: u64, data: &Dataset, cfg: &TrainConfig) -> RunOutput {
    let started = Instant::now();
    let cfg = TrainConfig { seed, ..*cfg };
    let base = RunRecord {
        run_id: "baseline".into(),
        cell: "Classical baseline".into(),
        kind: RunKind::Baseline,
        entanglement: None,
        mu: None,
        seed,
        status: RunStatus::Ok,
        error: None,
        train_accuracy: 0.0,
        val_accuracy: 0.0,
        test_accuracy: 0.0,
        best_epoch: 0,
        epochs: cfg.epochs,
        accuracy_history: None,
        theta_history: None,
        wall_time: 0.0,
    };
    let mut rng = init_rng(seed);
    let net = ClassicalBaseline::random(data.n_features(), n_q, data.n_classes, &mut rng);
    match finish(net, data, &cfg, false, base.clone(), started) {
        Ok((record, net, history)) => RunOutput {
            record,
            model: Some(Model::Baseline(net)),
            history: Some(history),
        },
        Err(e) => RunOutput {
            record: RunRecord::failed(
                base.run_id,
                base.cell,
                RunKind::Baseline,
                None,
                None,
                seed,
                cfg.epochs,
                &e,
                started.elapsed().as_secs_f64(),
            ),
            model: None,
            history: None,
        },
    }
}

/// One sampling cell of a search, e.g. `{"mode": "constrained", "k": 2, "runs": 50}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub mode: CellMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, rename = "E", skip_serializing_if = "Option::is_none")]
    pub e: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    pub runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellMode {
    Unconstrained,
    Constrained,
    SemiConstrained,
}

impl CellSpec {
    pub fn new(mode: SamplingMode, runs: usize) -> Self {
        let mut c = CellSpec {
            mode: CellMode::Unconstrained,
            k: None,
            e: None,
            k_max: None,
            runs,
        };
        match mode {
            SamplingMode::Unconstrained { e } => c.e = Some(e),
            SamplingMode::Constrained { k } => {
                c.mode = CellMode::Constrained;
                c.k = Some(k);
            }
            SamplingMode::SemiConstrained { k_max } => {
                c.mode = CellMode::SemiConstrained;
                c.k_max = Some(k_max);
            }
        }
        c
    }

    pub fn sampling_mode(&self) -> Result<SamplingMode> {
        let bad = |m: &str| Error::InvalidSpec(m.to_string());
        match (self.mode, self.k, self.e, self.k_max) {
            (CellMode::Unconstrained, None, Some(e), None) => Ok(SamplingMode::Unconstrained { e }),
            (CellMode::Constrained, Some(k), None, None) => Ok(SamplingMode::Constrained { k }),
            (CellMode::SemiConstrained, None, None, Some(k_max)) => {
                Ok(SamplingMode::SemiConstrained { k_max })
            }
            (CellMode::Unconstrained, ..) => Err(bad("unconstrained cells take exactly `E`")),
            (CellMode::Constrained, ..) => Err(bad("constrained cells take exactly `k`")),
            (CellMode::SemiConstrained, ..) => {
                Err(bad("semi-constrained cells take exactly `k_max`"))
            }
        }
    }

    /// Row label in the style of the results table.
    pub fn label(&self, n_q: usize) -> Result<String> {
        let max = (n_q * n_q.saturating_sub(1)).max(1) as f64;
        Ok(match self.sampling_mode()? {
            SamplingMode::Unconstrained { e } => {
                format!("Unconstrained μ = {}%", percent(100.0 * e as f64 / max))
            }
            SamplingMode::Constrained { k } => format!(
                "Constrained μ = {}%, k = {k}",
                percent(100.0 * (n_q * k) as f64 / max)
            ),
            SamplingMode::SemiConstrained { k_max } => format!(
                "Semi-constrained μ ∈ [0%, {}%], k_max = {k_max}",
                percent(100.0 * (n_q * k_max) as f64 / max)
            ),
        })
    }
}

fn percent(v: f64) -> i64 {
    v.round_ties_even() as i64
}

/// Table-style label of a conventional topology on `n_q` qubits.
pub fn topology_label(kind: TopologyKind, n_q: usize) -> Result<String> {
    let mu = percent(kind.build(n_q)?.density()?);
    Ok(match kind {
        TopologyKind::Ring => format!("{} μ = {mu}%, k = 1", kind.label()),
        _ => format!("{} μ = {mu}%", kind.label()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default = "default_n_q")]
    pub n_q: usize,
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub conventional: Vec<TopologyKind>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub train: TrainConfig,
}

fn default_n_q() -> usize {
    8
}

impl SearchConfig {
    pub fn check(&self) -> Result<()> {
        self.train.check()?;
        for cell in &self.cells {
            if cell.runs == 0 {
                return Err(Error::InvalidSpec("every cell needs runs >= 1".into()));
            }
            SamplingSpec::new(self.n_q, cell.sampling_mode()?)?;
        }
        if !self.conventional.is_empty() && self.n_q < 2 {
            return Err(Error::TooFewQubits {
                n_q: self.n_q,
                min: 2,
            });
        }
        Ok(())
    }

    pub fn total_runs(&self) -> usize {
        self.cells.iter().map(|c| c.runs).sum::<usize>() + self.conventional.len()
    }
}

struct Job {
    run_id: String,
    cell: String,
    descriptor: ConfigDescriptor,
    seed: u64,
}

fn plan(cfg: &SearchConfig) -> Result<Vec<Job>> {
    let mut jobs = Vec::with_capacity(cfg.total_runs());
    for (ci, cell) in cfg.cells.iter().enumerate() {
        let mode = cell.sampling_mode()?;
        let spec = SamplingSpec::new(cfg.n_q, mode)?;
        let label = cell.label(cfg.n_q)?;
        for ri in 0..cell.runs {
            let seed = run_seed(cfg.master_seed, ci as u64, ri as u64);
            let beta = spec.sample(&mut ChaCha8Rng::seed_from_u64(seed))?;
            jobs.push(Job {
                run_id: format!("c{ci:02}-r{ri:03}"),
                cell: label.clone(),
                descriptor: ConfigDescriptor::new(&beta, mode.into(), Some(seed)),
                seed,
            });
        }
    }
    for (ti, kind) in cfg.conventional.iter().enumerate() {
        let seed = run_seed(cfg.master_seed, (cfg.cells.len() + ti) as u64, 0);
        let beta = kind.build(cfg.n_q)?;
        jobs.push(Job {
            run_id: format!(
                "topo-{}",
                serde_json::to_value(kind)?.as_str().unwrap_or("?")
            ),
            cell: topology_label(*kind, cfg.n_q)?,
            descriptor: ConfigDescriptor::new(&beta, Origin::Topology { kind: *kind }, None),
            seed,
        });
    }
    Ok(jobs)
}

/// Runs every cell of `cfg` on up to `jobs` threads. Results come back in
/// canonical order (cells in config order, then run index, then
/// conventional topologies) whatever order they finished in.
pub fn run_search(cfg: &SearchConfig, data: &Dataset, jobs: usize) -> Result<Vec<RunOutput>> {
    cfg.check()?;
    let plan = plan(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(pool.install(|| {
        plan.par_iter()
            .map(|job| {
                let out = run_single(
                    &job.run_id,
                    &job.cell,
                    &job.descriptor,
                    job.seed,
                    data,
                    &cfg.train,
                );
                log::info!(
                    "{} [{}] val={:.4} test={:.4} {:?}",
                    out.record.run_id,
                    out.record.cell,
                    out.record.val_accuracy,
                    out.record.test_accuracy,
                    out.record.status
                );
                out
            })
            .collect()
    }))
}

/// Which accuracy decides constructiveness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Test,
    Validation,
}

/// Successful records that strictly beat the baseline.
pub fn constructive_subspace<'a>(
    records: &'a [RunRecord],
    baseline: &RunRecord,
    criterion: Criterion,
) -> Vec<&'a RunRecord> {
    let pick = |r: &RunRecord| match criterion {
        Criterion::Test => r.test_accuracy,
        Criterion::Validation => r.val_accuracy,
    };
    let bar = pick(baseline);
    records
        .iter()
        .filter(|r| r.is_ok() && pick(r) > bar)
        .collect()
}

/// Number of records kept by a top-`r`% selection out of `n`.
pub fn top_r_count(n: usize, r: f64) -> usize {
    ((r * n as f64 / 100.0 + 1e-9).floor() as usize).clamp(1, n.max(1))
}

/// The best `max(1, floor(r N / 100))` successful records by validation
/// accuracy; ties keep the lexicographically smaller run id first.
pub fn top_r_select(records: &[RunRecord], r: f64) -> Result<Vec<&RunRecord>> {
    if !(r > 0.0 && r <= 100.0) {
        return Err(Error::InvalidArgument(format!("r = {r} outside (0, 100]")));
    }
    let mut ok: Vec<&RunRecord> = records.iter().filter(|r| r.is_ok()).collect();
    if ok.is_empty() {
        return Err(Error::Empty("records for top-r selection"));
    }
    ok.sort_by(|a, b| {
        b.val_accuracy
            .total_cmp(&a.val_accuracy)
            .then_with(|| a.run_id.cmp(&b.run_id))
    });
    let n = top_r_count(ok.len(), r);
    ok.truncate(n);
    Ok(ok)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub members: Vec<String>,
    pub accuracy: f64,
    /// Summed member probabilities per sample.
    pub aggregated: Vec<Vec<f64>>,
    pub predictions: Vec<usize>,
}

/// Sums member probability vectors per sample and predicts the argmax
/// (lower class on ties). `member_probs[m][s]` is member `m`'s vector for
/// sample `s`.
pub fn vote_probabilities(
    members: Vec<String>,
    member_probs: &[Vec<Vec<f64>>],
    labels: &[usize],
) -> Result<EnsembleResult> {
    let first = member_probs
        .first()
        .ok_or(Error::Empty("ensemble members"))?;
    let n_samples = labels.len();
    let n_out = first.first().map_or(0, Vec::len);
    for probs in member_probs {
        if probs.len() != n_samples {
            return Err(Error::dim("member sample count", n_samples, probs.len()));
        }
        if let Some(p) = probs.iter().find(|p| p.len() != n_out) {
            return Err(Error::dim("member class count", n_out, p.len()));
        }
    }
    let mut aggregated = vec![vec![0.0; n_out]; n_samples];
    for probs in member_probs {
        for (acc, p) in aggregated.iter_mut().zip(probs) {
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v;
            }
        }
    }
    let predictions: Vec<usize> = aggregated.iter().map(|a| argmax(a)).collect();
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, y)| p == y)
        .count();
    let accuracy = if n_samples == 0 {
        0.0
    } else {
        correct as f64 / n_samples as f64
    };
    Ok(EnsembleResult {
        members,
        accuracy,
        aggregated,
        predictions,
    })
}

/// Probability-based majority vote of trained models on one split.
pub fn ensemble_vote<M: Classifier>(
    members: &[(&str, &M)],
    set: &LabeledSet,
) -> Result<EnsembleResult> {
    if members.is_empty() {
        return Err(Error::Empty("ensemble members"));
    }
    if set.is_empty() {
        return Err(Error::Empty("ensemble evaluation split"));
    }
    let n_out = members[0].1.n_out();
    let mut all = Vec::with_capacity(members.len());
    for (_, m) in members {
        if m.n_out() != n_out {
            return Err(Error::dim("ensemble member outputs", n_out, m.n_out()));
        }
        all.push(predict_all(*m, set)?.into_iter().map(|p| p.probs).collect());
    }
    vote_probabilities(
        members.iter().map(|(id, _)| id.to_string()).collect(),
        &all,
        &set.y,
    )
}

/// Summary of one ensemble for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub cell: String,
    pub r: f64,
    pub members: Vec<String>,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub cell: String,
    pub mode: String,
    pub runs: usize,
    pub failed: usize,
    pub best_test_accuracy: f64,
    pub median_test_accuracy: f64,
    pub constructive_count: usize,
    pub constructive_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub test_accuracy: f64,
    pub configurations: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSection {
    pub title: String,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructiveSummary {
    pub count: usize,
    pub total: usize,
    pub fraction: f64,
    pub run_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_test_accuracy: Option<f64>,
    pub cells: Vec<CellRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constructive: Option<ConstructiveSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensembles: Option<Vec<EnsembleSummary>>,
    pub conventional: Vec<TableRow>,
    pub table: Vec<TableSection>,
    #[serde(skip)]
    scatter: Vec<ScatterRow>,
}

#[derive(Debug, Clone, PartialEq)]
struct ScatterRow {
    cell: String,
    mode: &'static str,
    mu: f64,
    k: Option<usize>,
    test_accuracy: f64,
}

fn mode_name(o: Option<Origin>) -> &'static str {
    match o {
        Some(Origin::Unconstrained { .. }) => "unconstrained",
        Some(Origin::Constrained { .. }) => "constrained",
        Some(Origin::SemiConstrained { .. }) => "semi_constrained",
        Some(Origin::Topology { .. }) => "topology",
        Some(Origin::Explicit) => "explicit",
        None => "baseline",
    }
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Builds the summary: per-cell statistics, constructive counts, ensemble
/// rows and conventional-topology rows, in first-appearance order.
pub fn report(
    records: &[RunRecord],
    baseline: Option<&RunRecord>,
    ensembles: &[EnsembleSummary],
) -> Report {
    let bar = baseline.filter(|b| b.is_ok()).map(|b| b.test_accuracy);
    let sampled: Vec<&RunRecord> = records
        .iter()
        .filter(|r| {
            !matches!(r.origin(), Some(Origin::Topology { .. })) && r.kind == RunKind::Dressed
        })
        .collect();

    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in &sampled {
        if !groups.contains_key(r.cell.as_str()) {
            order.push(&r.cell);
        }
        groups.entry(&r.cell).or_default().push(r);
    }
    let cells = order
        .iter()
        .map(|label| {
            let group = &groups[label];
            let ok: Vec<&&RunRecord> = group.iter().filter(|r| r.is_ok()).collect();
            let mut accs: Vec<f64> = ok.iter().map(|r| r.test_accuracy).collect();
            let constructive = bar.map_or(0, |b| accs.iter().filter(|a| **a > b).count());
            CellRow {
                cell: label.to_string(),
                mode: mode_name(group[0].origin()).to_string(),
                runs: group.len(),
                failed: group.len() - ok.len(),
                best_test_accuracy: accs.iter().copied().fold(0.0, f64::max),
                median_test_accuracy: median(&mut accs),
                constructive_count: constructive,
                constructive_fraction: constructive as f64 / group.len() as f64,
            }
        })
        .collect();

    let constructive = baseline.filter(|b| b.is_ok()).map(|b| {
        let owned: Vec<RunRecord> = sampled.iter().map(|r| (*r).clone()).collect();
        let ids: Vec<String> = constructive_subspace(&owned, b, Criterion::Test)
            .into_iter()
            .map(|r| r.run_id.clone())
            .collect();
        ConstructiveSummary {
            count: ids.len(),
            total: sampled.len(),
            fraction: if sampled.is_empty() {
                0.0
            } else {
                ids.len() as f64 / sampled.len() as f64
            },
            run_ids: ids,
        }
    });

    let conventional: Vec<TableRow> = records
        .iter()
        .filter(|r| matches!(r.origin(), Some(Origin::Topology { .. })))
        .map(|r| TableRow {
            label: r.cell.clone(),
            test_accuracy: r.test_accuracy,
            configurations: "1".into(),
        })
        .collect();

    let mut table = Vec::new();
    let full: Vec<TableRow> = ensembles
        .iter()
        .filter(|e| e.r >= 100.0)
        .map(|e| TableRow {
            label: e.cell.clone(),
            test_accuracy: e.test_accuracy,
            configurations: e.members.len().to_string(),
        })
        .collect();
    if !full.is_empty() {
        table.push(TableSection {
            title: "Test Accuracy using Ensemble Configuration Majority Voting".into(),
            rows: full,
        });
    }
    let top: Vec<TableRow> = ensembles
        .iter()
        .filter(|e| e.r < 100.0)
        .map(|e| TableRow {
            label: e.cell.clone(),
            test_accuracy: e.test_accuracy,
            configurations: format!("Top - {} % of runs", e.r),
        })
        .collect();
    if !top.is_empty() {
        table.push(TableSection {
            title: "Test Accuracies by Top-r% Ensemble Configuration Majority Voting".into(),
            rows: top,
        });
    }
    if !conventional.is_empty() {
        table.push(TableSection {
            title: "Test Accuracies using Conventional Entanglement Configurations".into(),
            rows: conventional.clone(),
        });
    }
    if let Some(b) = bar {
        table.push(TableSection {
            title: "Classical Baseline".into(),
            rows: vec![TableRow {
                label: "Classical baseline".into(),
                test_accuracy: b,
                configurations: "1".into(),
            }],
        });
    }

    let scatter = records
        .iter()
        .filter(|r| r.is_ok() && r.kind == RunKind::Dressed)
        .map(|r| ScatterRow {
            cell: r.cell.clone(),
            mode: mode_name(r.origin()),
            mu: r.mu.unwrap_or(0.0),
            k: match r.origin() {
                Some(Origin::Constrained { k }) => Some(k),
                Some(Origin::SemiConstrained { k_max }) => Some(k_max),
                _ => None,
            },
            test_accuracy: r.test_accuracy,
        })
        .collect();

    Report {
        baseline_test_accuracy: bar,
        cells,
        constructive,
        ensembles: if ensembles.is_empty() {
            None
        } else {
            Some(ensembles.to_vec())
        },
        conventional,
        table,
        scatter,
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// `cell,mode,mu,k,test_acc` per successful dressed run.
    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("cell,mode,mu,k,test_acc\n");
        for r in &self.scatter {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&r.cell),
                r.mode,
                r.mu,
                r.k.map(|k| k.to_string()).unwrap_or_default(),
                r.test_accuracy
            ));
        }
        out
    }

    /// `cell,r,ensemble_acc` per ensemble.
    pub fn topr_csv(&self) -> String {
        let mut out = String::from("cell,r,ensemble_acc\n");
        for e in self.ensembles.iter().flatten() {
            out.push_str(&format!(
                "{},{},{}\n",
                csv_field(&e.cell),
                e.r,
                e.test_accuracy
            ));
        }
        out
    }
}

pub fn write_records(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut f =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}
