//! Seeded experiment runs and parameter sweeps.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use pdpsgd_core::trainer::{TrainHook, TrainOutcome, Trainer};
use pdpsgd_core::{generate_epsilons, synthetic_dataset, LabeledDataset, PrivacySpec, RoundRecord};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Algorithm, DataSource, ExperimentConfig};
use crate::error::{Error, Result};
use crate::idx::load_idx;
use crate::output::{self, MetricsRow};

/// Shuffled with `data_seed`, then split at `train_size`.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    let full = match &cfg.data {
        DataSource::Synthetic {
            n,
            dim,
            classes,
            separation,
        } => synthetic_dataset(*n, *dim, *classes, *separation, cfg.data_seed)?,
        DataSource::Idx { images, labels } => load_idx(images, labels)?.dataset,
    };
    if cfg.train_size == 0 || cfg.train_size >= full.len() {
        return Err(Error::Usage(format!(
            "train-size: {} does not leave a train/test split of {} examples",
            cfg.train_size,
            full.len()
        )));
    }
    let shuffled = full.shuffled(&mut ChaCha8Rng::seed_from_u64(cfg.data_seed));
    Ok(shuffled.split(cfg.train_size)?)
}

/// Budgets from the configured distribution, assigned to examples in a
/// seeded random order.
pub fn assign_epsilons(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut eps = generate_epsilons(n, cfg.shape(), cfg.eps_lo, cfg.eps_hi, cfg.groups)?;
    eps.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e95));
    Ok(eps)
}

#[derive(Default)]
struct Instruments {
    started: Option<Instant>,
    round_ms: Vec<u64>,
    max_clipped_norm: f64,
}

impl TrainHook for Instruments {
    fn on_round(&mut self, _record: &RoundRecord) {
        let now = Instant::now();
        let start = self.started.replace(now).unwrap_or(now);
        self.round_ms.push(now.duration_since(start).as_millis() as u64);
    }

    fn on_clipped_batch(&mut self, max_norm: f64, _batch_len: usize) {
        self.max_clipped_norm = self.max_clipped_norm.max(max_norm);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub train_acc: Option<f64>,
    pub test_acc: Option<f64>,
    pub total_iterations: u64,
    pub total_epsilon: Option<f64>,
    pub rounds_completed: usize,
    pub max_clipped_norm: f64,
    pub wall_ms: u64,
    pub guarantee_ok: bool,
    pub stop_reason: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// Unix seconds; the only field that changes between identical runs
    /// apart from wall times.
    pub generated_at: u64,
    pub algorithm: Algorithm,
    pub config: ExperimentConfig,
    pub runs: Vec<SeedSummary>,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
    pub train_acc_mean: f64,
    pub iterations_mean: f64,
    pub failed_runs: usize,
    pub all_guarantees_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<MetricsRow>,
    pub summary: Summary,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn train_once(
    cfg: &ExperimentConfig,
    train: &LabeledDataset,
    test: &LabeledDataset,
    seed: u64,
    hook: &mut Instruments,
) -> Result<(TrainOutcome, bool)> {
    let tc = cfg.train_config(seed);
    let mut trainer = Trainer::new(train, &tc, hook).with_test(test);
    let outcome = if cfg.algorithm == Algorithm::Dpsgd {
        trainer.dpsgd_uniform(cfg.dpsgd_epsilon())?
    } else {
        let eps = assign_epsilons(cfg, train.len(), seed)?;
        let spec = PrivacySpec::from_budgets(train.users(), &eps, cfg.delta, cfg.r_max)?;
        match cfg.algorithm {
            Algorithm::PdpsgdFixed | Algorithm::PdpsgdAdaptive => trainer.pdpsgd(&spec)?,
            Algorithm::Sampling => trainer.sampling_baseline(&spec)?,
            Algorithm::Adapdp => trainer.adapdp(&spec)?,
            Algorithm::Dpsgd => unreachable!(),
        }
    };
    let ok = match &outcome.ledger {
        Some(l) => l.guarantee_report().all_ok,
        None => outcome.metrics.total_epsilon <= cfg.dpsgd_epsilon(),
    };
    Ok((outcome, ok))
}

fn run_seed(
    cfg: &ExperimentConfig,
    train: &LabeledDataset,
    test: &LabeledDataset,
    seed: u64,
) -> (Vec<MetricsRow>, SeedSummary) {
    let mut hook = Instruments {
        started: Some(Instant::now()),
        ..Instruments::default()
    };
    let t0 = Instant::now();
    match train_once(cfg, train, test, seed, &mut hook) {
        Ok((out, ok)) => {
            let m = &out.metrics;
            let rows = m
                .rounds
                .iter()
                .enumerate()
                .map(|(i, r)| MetricsRow {
                    algorithm: cfg.algorithm.name().to_string(),
                    seed,
                    round: r.round,
                    tau: r.tau,
                    sigma: r.sigma,
                    epsilon_spent: r.epsilon_spent,
                    train_acc: r.train_acc,
                    test_acc: r.test_acc,
                    iterations: r.iterations,
                    wall_ms: hook.round_ms.get(i).copied().unwrap_or(0),
                    guarantee_ok: ok,
                })
                .collect();
            let summary = SeedSummary {
                seed,
                train_acc: Some(m.train_acc),
                test_acc: m.test_acc,
                total_iterations: m.total_iterations,
                total_epsilon: Some(m.total_epsilon),
                rounds_completed: m.rounds.len(),
                max_clipped_norm: hook.max_clipped_norm,
                wall_ms: t0.elapsed().as_millis() as u64,
                guarantee_ok: ok,
                stop_reason: m.stop_reason.clone(),
                error: None,
            };
            (rows, summary)
        }
        Err(e) => (
            Vec::new(),
            SeedSummary {
                seed,
                train_acc: None,
                test_acc: None,
                total_iterations: 0,
                total_epsilon: None,
                rounds_completed: 0,
                max_clipped_norm: hook.max_clipped_norm,
                wall_ms: t0.elapsed().as_millis() as u64,
                guarantee_ok: true,
                stop_reason: None,
                error: Some(e.to_string()),
            },
        ),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))
}

fn experiment_on(
    cfg: &ExperimentConfig,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<ExperimentResult> {
    let base = cfg.base_seed()?;
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|s| base + s).collect();
    let per_seed: Vec<(Vec<MetricsRow>, SeedSummary)> =
        seeds.par_iter().map(|&s| run_seed(cfg, train, test, s)).collect();

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (r, s) in per_seed {
        rows.extend(r);
        runs.push(s);
    }
    let done: Vec<&SeedSummary> = runs.iter().filter(|r| r.error.is_none()).collect();
    let test_accs: Vec<f64> = done.iter().filter_map(|r| r.test_acc).collect();
    let train_accs: Vec<f64> = done.iter().filter_map(|r| r.train_acc).collect();
    let iters: Vec<f64> = done.iter().map(|r| r.total_iterations as f64).collect();
    let (test_acc_mean, test_acc_std) = mean_std(&test_accs);
    let summary = Summary {
        generated_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        algorithm: cfg.algorithm,
        config: cfg.clone(),
        test_acc_mean,
        test_acc_std,
        train_acc_mean: mean_std(&train_accs).0,
        iterations_mean: mean_std(&iters).0,
        failed_runs: runs.len() - done.len(),
        all_guarantees_ok: runs.iter().all(|r| r.guarantee_ok),
        runs,
    };
    Ok(ExperimentResult { rows, summary })
}

/// Runs `cfg.seeds` trainings, up to `jobs` at a time.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (train, test) = prepare_data(cfg)?;
    pool(jobs)?.install(|| experiment_on(cfg, &train, &test))
}

pub fn write_experiment(result: &ExperimentResult, stem: &Path) -> Result<()> {
    let (csv_path, json_path) = output::output_paths(stem);
    output::write_atomic(&csv_path, &output::csv_bytes(&result.rows)?)?;
    output::write_atomic(&json_path, &output::json_bytes(&result.summary)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Skew `k` of the budget distribution.
    Skew,
    /// `w1` of the fixed-weight loss, with `w2 = 1 − w1`.
    Weight,
    /// Budget range `[eps_lo, eps_lo + α]`.
    Interval,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Skew => "skew",
            SweepKind::Weight => "weight",
            SweepKind::Interval => "interval",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "skew" => Ok(SweepKind::Skew),
            "weight" => Ok(SweepKind::Weight),
            "interval" => Ok(SweepKind::Interval),
            _ => Err(Error::Usage(format!("sweep: expected skew, weight or interval, got `{s}`"))),
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepKind::Skew => vec![-0.2, 0.0, 0.2],
            SweepKind::Weight => vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            SweepKind::Interval => vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }

    pub fn apply(self, base: &ExperimentConfig, value: f64) -> ExperimentConfig {
        let mut c = base.clone();
        match self {
            SweepKind::Skew => {
                c.skew = value;
                c.c1 = None;
                c.c2 = None;
            }
            SweepKind::Weight => {
                if c.algorithm == Algorithm::PdpsgdAdaptive {
                    c.algorithm = Algorithm::PdpsgdFixed;
                }
                c.w1 = Some(value);
                c.w2 = Some(1.0 - value);
            }
            SweepKind::Interval => c.eps_hi = c.eps_lo + value,
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub value: f64,
    pub summary: Option<Summary>,
    pub error: Option<String>,
    #[serde(skip)]
    pub rows: Vec<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub sweep: SweepKind,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn all_guarantees_ok(&self) -> bool {
        self.cells
            .iter()
            .all(|c| c.summary.as_ref().is_none_or(|s| s.all_guarantees_ok))
    }
}

/// One experiment per value; a failing cell is recorded and the others
/// still run.
pub fn run_sweep(base: &ExperimentConfig, kind: SweepKind, values: &[f64], jobs: usize) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Usage("values: sweep needs at least one value".into()));
    }
    base.validate()?;
    let (train, test) = prepare_data(base)?;
    let cells = pool(jobs)?.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let cfg = kind.apply(base, v);
                match cfg.validate().and_then(|_| experiment_on(&cfg, &train, &test)) {
                    Ok(r) => SweepCell {
                        value: v,
                        summary: Some(r.summary),
                        error: None,
                        rows: r.rows,
                    },
                    Err(e) => SweepCell {
                        value: v,
                        summary: None,
                        error: Some(e.to_string()),
                        rows: Vec::new(),
                    },
                }
            })
            .collect()
    });
    Ok(SweepResult { sweep: kind, cells })
}

pub fn write_sweep(result: &SweepResult, stem: &Path) -> Result<()> {
    let (csv_path, json_path) = output::output_paths(stem);
    let cells: Vec<(f64, &[MetricsRow])> = result.cells.iter().map(|c| (c.value, c.rows.as_slice())).collect();
    output::write_atomic(&csv_path, &output::sweep_csv_bytes(result.sweep.name(), &cells)?)?;
    output::write_atomic(&json_path, &output::json_bytes(result)?)
}
