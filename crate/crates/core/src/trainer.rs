//! PDP-SGD and the baselines it is compared against.
//!
//! All four trainers share one DP-SGD phase: Poisson batches at rate
//! `q = B/|D|`, per-example clipping, one Gaussian draw per batch and a
//! normalizer equal to the expected batch size. They differ in how rounds,
//! thresholds and samples are chosen.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::accountant::{rdp_to_dp, subsampled_gaussian_rdp};
use crate::calibration::{get_noise_multiplier, AccountingHistory, CalibrationOptions};
use crate::data::LabeledDataset;
use crate::dpsgd::{clip_in_place, noise_and_normalize, sgd_step};
use crate::error::{invalid_arg, Error, Result};
use crate::ledger::{BudgetLedger, PrivacySpec};
use crate::model::{argmax, Architecture, ModelParams, Workspace};
use crate::sampling::{round_sample, sampling_probabilities, PoissonBatches};
use crate::threshold::{optimize_threshold, LossKind};
use crate::{math, UserId};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub clip_norm: f64,
    /// Expected batch size.
    pub batch_size: usize,
    pub rounds: usize,
    pub epochs_per_round: usize,
    pub delta: f64,
    pub tolerance: f64,
    pub loss: LossKind,
    pub grid_points: usize,
    pub r_max: usize,
    /// Hidden layer widths; empty means logistic regression.
    pub hidden: Vec<usize>,
    /// Fixed σ for AdaPDP rounds instead of calibrating one.
    pub adapdp_noise_multiplier: Option<f64>,
    pub max_steps_per_round: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            clip_norm: 1.0,
            batch_size: 64,
            rounds: 3,
            epochs_per_round: 5,
            delta: 1e-5,
            tolerance: 0.01,
            loss: LossKind::Adaptive,
            grid_points: 501,
            r_max: crate::ledger::DEFAULT_MAX_ROUNDS,
            hidden: Vec::new(),
            adapdp_noise_multiplier: None,
            max_steps_per_round: 1_000_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("clip_norm", self.clip_norm),
            ("tolerance", self.tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid_arg!("{name} must be positive, got {v}"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid_arg!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.batch_size == 0 || self.rounds == 0 || self.epochs_per_round == 0 {
            return Err(invalid_arg!("batch_size, rounds and epochs_per_round must be positive"));
        }
        if self.rounds > self.r_max {
            return Err(invalid_arg!("rounds {} exceed the cap {}", self.rounds, self.r_max));
        }
        if self.grid_points < 2 {
            return Err(invalid_arg!("grid_points must be at least 2"));
        }
        if let Some(s) = self.adapdp_noise_multiplier {
            if !(s > 0.0) {
                return Err(invalid_arg!("adapdp noise multiplier must be positive"));
            }
        }
        if self.max_steps_per_round == 0 {
            return Err(invalid_arg!("max_steps_per_round must be positive"));
        }
        Ok(())
    }

    fn architecture(&self, data: &LabeledDataset) -> Architecture {
        Architecture {
            input_dim: data.dim(),
            hidden: self.hidden.clone(),
            classes: data.classes(),
        }
    }

    fn calibration(&self) -> CalibrationOptions {
        CalibrationOptions {
            tolerance: self.tolerance,
            ..CalibrationOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    /// Starts at 1.
    pub round: usize,
    pub tau: f64,
    pub sigma: f64,
    pub epsilon_spent: f64,
    pub sample_size: usize,
    pub iterations: u64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunMetrics {
    pub rounds: Vec<RoundRecord>,
    pub total_iterations: u64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    /// Accountant ε of all rounds composed, at the base δ.
    pub total_epsilon: f64,
    /// Why training ended before the configured number of rounds.
    pub stop_reason: Option<String>,
}

/// Observes a run.
pub trait TrainHook {
    fn on_round(&mut self, _record: &RoundRecord) {}
    /// Largest per-example norm after clipping in one batch.
    fn on_clipped_batch(&mut self, _max_norm: f64, _batch_len: usize) {}
}

impl TrainHook for () {}

pub trait Classifier {
    fn predict_one(&self, x: &[f64]) -> Result<usize>;
}

impl Classifier for ModelParams {
    fn predict_one(&self, x: &[f64]) -> Result<usize> {
        self.predict(x)
    }
}

/// Models combined by a weighted average of their class probabilities.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleModel {
    members: Vec<(ModelParams, f64)>,
}

impl EnsembleModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, model: ModelParams, weight: f64) -> Result<()> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(invalid_arg!("ensemble weight must be positive, got {weight}"));
        }
        self.members.push((model, weight));
        Ok(())
    }

    pub fn members(&self) -> &[(ModelParams, f64)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let first = match self.members.first() {
            Some((m, _)) => m,
            None => return Err(Error::InvalidState("ensemble has no members".to_string())),
        };
        let total: f64 = self.members.iter().map(|(_, w)| w).sum();
        let mut acc = vec![0.0; first.architecture().classes];
        for (m, w) in &self.members {
            let p = m.probabilities(x)?;
            if p.len() != acc.len() {
                return Err(Error::InvalidState("ensemble members disagree on classes".to_string()));
            }
            for (a, v) in acc.iter_mut().zip(p) {
                *a += w / total * v;
            }
        }
        Ok(acc)
    }
}

impl Classifier for EnsembleModel {
    fn predict_one(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.probabilities(x)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TrainedModel {
    Single(ModelParams),
    Ensemble(EnsembleModel),
}

impl Classifier for TrainedModel {
    fn predict_one(&self, x: &[f64]) -> Result<usize> {
        match self {
            TrainedModel::Single(m) => m.predict_one(x),
            TrainedModel::Ensemble(e) => e.predict_one(x),
        }
    }
}

pub fn predict<C: Classifier + ?Sized>(model: &C, data: &LabeledDataset) -> Result<Vec<usize>> {
    (0..data.len()).map(|i| model.predict_one(data.example(i))).collect()
}

pub fn accuracy<C: Classifier + ?Sized>(model: &C, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let labels = predict(model, data)?;
    let hits = labels.iter().zip(data.labels()).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    /// Absent for uniform DP-SGD, which has no per-user budgets.
    pub ledger: Option<BudgetLedger>,
    pub metrics: RunMetrics,
}

/// One training run over `train`, optionally scored on `test` each round.
pub struct Trainer<'a> {
    train: &'a LabeledDataset,
    test: Option<&'a LabeledDataset>,
    config: &'a TrainConfig,
    hook: &'a mut dyn TrainHook,
}

impl<'a> Trainer<'a> {
    pub fn new(train: &'a LabeledDataset, config: &'a TrainConfig, hook: &'a mut dyn TrainHook) -> Self {
        Self {
            train,
            test: None,
            config,
            hook,
        }
    }

    pub fn with_test(mut self, test: &'a LabeledDataset) -> Self {
        self.test = Some(test);
        self
    }

    fn check(&self) -> Result<()> {
        self.config.validate()?;
        if self.train.is_empty() {
            return Err(invalid_arg!("training set is empty"));
        }
        if let Some(t) = self.test {
            if t.dim() != self.train.dim() {
                return Err(invalid_arg!("test set dimension differs from training set"));
            }
        }
        Ok(())
    }

    /// Ledger position of every example; the spec must cover exactly the
    /// dataset's users.
    fn example_positions(&self, ledger: &BudgetLedger) -> Result<Vec<usize>> {
        if ledger.len() != self.train.len() {
            return Err(invalid_arg!(
                "privacy spec has {} users, dataset has {} examples",
                ledger.len(),
                self.train.len()
            ));
        }
        let mut example_of = vec![usize::MAX; ledger.len()];
        for (i, &u) in self.train.users().iter().enumerate() {
            let pos = ledger
                .position(u)
                .ok_or_else(|| invalid_arg!("user {u} has no privacy requirement"))?;
            example_of[pos] = i;
        }
        Ok(example_of)
    }

    fn record(
        &mut self,
        metrics: &mut RunMetrics,
        model: &dyn Classifier,
        mut record: RoundRecord,
    ) -> Result<()> {
        record.train_acc = accuracy(model, self.train)?;
        record.test_acc = match self.test {
            Some(t) => Some(accuracy(model, t)?),
            None => None,
        };
        metrics.total_iterations += record.iterations;
        metrics.train_acc = record.train_acc;
        metrics.test_acc = record.test_acc;
        self.hook.on_round(&record);
        metrics.rounds.push(record);
        Ok(())
    }

    fn finish_scores(&self, metrics: &mut RunMetrics, model: &dyn Classifier) -> Result<()> {
        if metrics.rounds.is_empty() {
            metrics.train_acc = accuracy(model, self.train)?;
            metrics.test_acc = match self.test {
                Some(t) => Some(accuracy(model, t)?),
                None => None,
            };
        }
        Ok(())
    }

    /// Personalized DP-SGD: one model carried across rounds, each round at
    /// its own threshold.
    pub fn pdpsgd(&mut self, spec: &PrivacySpec) -> Result<TrainOutcome> {
        self.check()?;
        let cfg = self.config;
        let mut ledger = BudgetLedger::new(spec, cfg.r_max)?;
        let example_of = self.example_positions(&ledger)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut model = ModelParams::init(cfg.architecture(self.train), &mut rng)?;
        let mut history = AccountingHistory::with_default_orders();
        let mut metrics = RunMetrics::default();

        for round in 1..=cfg.rounds {
            let active: Vec<f64> = ledger.active_budgets().iter().map(|(_, e)| *e).collect();
            if active.is_empty() {
                metrics.stop_reason = Some("all budgets exhausted".to_string());
                break;
            }
            let tau = match optimize_threshold(&active, cfg.loss, cfg.grid_points) {
                Ok(t) => t,
                Err(Error::BudgetExhausted(m)) => {
                    metrics.stop_reason = Some(m);
                    break;
                }
                Err(e) => return Err(e),
            };
            let plan = sampling_probabilities(&ledger.remaining_budgets(), tau)?;
            let positions: Vec<usize> = (0..ledger.len()).collect();
            let picked = round_sample(&positions, &plan, &mut rng)?;
            let sampled_ids: Vec<UserId> = picked.iter().map(|&p| ledger.entries()[p].id).collect();
            let members: Vec<usize> = picked.iter().map(|&p| example_of[p]).collect();

            if members.is_empty() {
                ledger.charge_round(&[], 0.0, &plan)?;
                let rec = RoundRecord {
                    round,
                    tau,
                    sigma: 0.0,
                    epsilon_spent: 0.0,
                    sample_size: 0,
                    iterations: 0,
                    train_acc: 0.0,
                    test_acc: None,
                };
                self.record(&mut metrics, &model, rec)?;
                continue;
            }

            let phase = match self.calibrated_phase(tau, members.len(), cfg.epochs_per_round) {
                Ok(p) => p,
                Err(Error::BudgetExhausted(m)) => {
                    metrics.stop_reason = Some(m);
                    break;
                }
                Err(e) => return Err(e),
            };
            let iterations = run_phase(&mut model, self.train, &members, &phase, cfg, &mut rng, self.hook)?;
            history.push(phase.sigma, phase.rate, phase.steps)?;
            ledger.charge_round(&sampled_ids, phase.epsilon, &plan)?;
            let rec = RoundRecord {
                round,
                tau,
                sigma: phase.sigma,
                epsilon_spent: phase.epsilon,
                sample_size: members.len(),
                iterations,
                train_acc: 0.0,
                test_acc: None,
            };
            self.record(&mut metrics, &model, rec)?;
        }
        metrics.total_epsilon = history.epsilon(cfg.delta)?;
        self.finish_scores(&mut metrics, &model)?;
        Ok(TrainOutcome {
            model: TrainedModel::Single(model),
            ledger: Some(ledger),
            metrics,
        })
    }

    /// DP-SGD on every example at one `(ε, δ)`, for `rounds·epochs_per_round`
    /// epochs.
    pub fn dpsgd_uniform(&mut self, epsilon: f64) -> Result<TrainOutcome> {
        self.check()?;
        let cfg = self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut model = ModelParams::init(cfg.architecture(self.train), &mut rng)?;
        let members: Vec<usize> = (0..self.train.len()).collect();
        let phase = self.calibrated_phase(epsilon, members.len(), cfg.rounds * cfg.epochs_per_round)?;
        let iterations = run_phase(&mut model, self.train, &members, &phase, cfg, &mut rng, self.hook)?;
        let mut metrics = RunMetrics {
            total_epsilon: phase.epsilon,
            ..RunMetrics::default()
        };
        let rec = RoundRecord {
            round: 1,
            tau: epsilon,
            sigma: phase.sigma,
            epsilon_spent: phase.epsilon,
            sample_size: members.len(),
            iterations,
            train_acc: 0.0,
            test_acc: None,
        };
        self.record(&mut metrics, &model, rec)?;
        Ok(TrainOutcome {
            model: TrainedModel::Single(model),
            ledger: None,
            metrics,
        })
    }

    /// One threshold from the fixed-weight loss, one sample, one DP-SGD run
    /// of `rounds·epochs_per_round` epochs.
    pub fn sampling_baseline(&mut self, spec: &PrivacySpec) -> Result<TrainOutcome> {
        self.check()?;
        let cfg = self.config;
        let loss = match cfg.loss {
            LossKind::Fixed { .. } => cfg.loss,
            LossKind::Adaptive => LossKind::Fixed { w1: 0.5, w2: 0.5 },
        };
        let mut ledger = BudgetLedger::new(spec, cfg.r_max)?;
        let example_of = self.example_positions(&ledger)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut model = ModelParams::init(cfg.architecture(self.train), &mut rng)?;
        let mut metrics = RunMetrics::default();

        let active: Vec<f64> = ledger.active_budgets().iter().map(|(_, e)| *e).collect();
        let tau = optimize_threshold(&active, loss, cfg.grid_points)?;
        let plan = sampling_probabilities(&ledger.remaining_budgets(), tau)?;
        let positions: Vec<usize> = (0..ledger.len()).collect();
        let picked = round_sample(&positions, &plan, &mut rng)?;
        let sampled_ids: Vec<UserId> = picked.iter().map(|&p| ledger.entries()[p].id).collect();
        let members: Vec<usize> = picked.iter().map(|&p| example_of[p]).collect();
        if members.is_empty() {
            ledger.charge_round(&[], 0.0, &plan)?;
            metrics.stop_reason = Some("empty sample".to_string());
        } else {
            let phase = self.calibrated_phase(tau, members.len(), cfg.rounds * cfg.epochs_per_round)?;
            let iterations = run_phase(&mut model, self.train, &members, &phase, cfg, &mut rng, self.hook)?;
            ledger.charge_round(&sampled_ids, phase.epsilon, &plan)?;
            metrics.total_epsilon = phase.epsilon;
            let rec = RoundRecord {
                round: 1,
                tau,
                sigma: phase.sigma,
                epsilon_spent: phase.epsilon,
                sample_size: members.len(),
                iterations,
                train_acc: 0.0,
                test_acc: None,
            };
            self.record(&mut metrics, &model, rec)?;
        }
        self.finish_scores(&mut metrics, &model)?;
        Ok(TrainOutcome {
            model: TrainedModel::Single(model),
            ledger: Some(ledger),
            metrics,
        })
    }

    /// A fresh model per round, trained step by step until its ε is within
    /// the tolerance of the round threshold, then averaged with weights
    /// `τ_T·|D_T|`.
    pub fn adapdp(&mut self, spec: &PrivacySpec) -> Result<TrainOutcome> {
        self.check()?;
        let cfg = self.config;
        let loss = match cfg.loss {
            LossKind::Fixed { .. } => cfg.loss,
            LossKind::Adaptive => LossKind::Fixed { w1: 0.2, w2: 0.8 },
        };
        let mut ledger = BudgetLedger::new(spec, cfg.r_max)?;
        let example_of = self.example_positions(&ledger)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let arch = cfg.architecture(self.train);
        let mut ensemble = EnsembleModel::new();
        let mut history = AccountingHistory::with_default_orders();
        let mut metrics = RunMetrics::default();
        let orders = history.orders().to_vec();

        for round in 1..=cfg.rounds {
            let active: Vec<f64> = ledger.active_budgets().iter().map(|(_, e)| *e).collect();
            if active.is_empty() {
                metrics.stop_reason = Some("all budgets exhausted".to_string());
                break;
            }
            let tau = match optimize_threshold(&active, loss, cfg.grid_points) {
                Ok(t) => t,
                Err(Error::BudgetExhausted(m)) => {
                    metrics.stop_reason = Some(m);
                    break;
                }
                Err(e) => return Err(e),
            };
            let plan = sampling_probabilities(&ledger.remaining_budgets(), tau)?;
            let positions: Vec<usize> = (0..ledger.len()).collect();
            let picked = round_sample(&positions, &plan, &mut rng)?;
            let sampled_ids: Vec<UserId> = picked.iter().map(|&p| ledger.entries()[p].id).collect();
            let members: Vec<usize> = picked.iter().map(|&p| example_of[p]).collect();
            let mut model = ModelParams::init(arch.clone(), &mut rng)?;
            if members.is_empty() {
                ledger.charge_round(&[], 0.0, &plan)?;
                continue;
            }

            let rate = sample_rate(cfg.batch_size, members.len());
            let sigma = match cfg.adapdp_noise_multiplier {
                Some(s) => s,
                None => {
                    let budget_steps = steps_for(cfg.rounds * cfg.epochs_per_round, cfg.batch_size, members.len());
                    match get_noise_multiplier(
                        tau,
                        cfg.delta,
                        rate,
                        budget_steps,
                        &AccountingHistory::with_default_orders(),
                        &cfg.calibration(),
                    ) {
                        Ok(c) => c.noise_multiplier,
                        Err(Error::BudgetExhausted(m)) => {
                            metrics.stop_reason = Some(m);
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            let one_step = subsampled_gaussian_rdp(sigma, rate, 1, &orders)?;
            let eps_after = |steps: u64| -> Result<f64> { Ok(rdp_to_dp(&one_step.repeated(steps), cfg.delta)?.epsilon) };

            let mut steps = 0u64;
            let mut spent = 0.0;
            let mut trainer = PhaseRunner::new(&model, self.train, &members, sigma, rate, cfg);
            while spent < tau - cfg.tolerance && steps < cfg.max_steps_per_round {
                let next = eps_after(steps + 1)?;
                if next > tau {
                    break;
                }
                trainer.step(&mut model, &mut rng, self.hook)?;
                steps += 1;
                spent = next;
            }
            if steps > 0 {
                history.push(sigma, rate, steps)?;
            }
            ledger.charge_round(&sampled_ids, spent, &plan)?;
            if steps > 0 {
                ensemble.push(model, tau * members.len() as f64)?;
            }
            let rec = RoundRecord {
                round,
                tau,
                sigma,
                epsilon_spent: spent,
                sample_size: members.len(),
                iterations: steps,
                train_acc: 0.0,
                test_acc: None,
            };
            if ensemble.is_empty() {
                metrics.total_iterations += steps;
                self.hook.on_round(&rec);
                metrics.rounds.push(rec);
            } else {
                self.record(&mut metrics, &ensemble, rec)?;
            }
        }
        metrics.total_epsilon = history.epsilon(cfg.delta)?;
        if ensemble.is_empty() {
            metrics.stop_reason.get_or_insert_with(|| "no round trained a model".to_string());
        } else {
            self.finish_scores(&mut metrics, &ensemble)?;
        }
        Ok(TrainOutcome {
            model: TrainedModel::Ensemble(ensemble),
            ledger: Some(ledger),
            metrics,
        })
    }

    fn calibrated_phase(&self, epsilon: f64, n_members: usize, epochs: usize) -> Result<Phase> {
        let cfg = self.config;
        let rate = sample_rate(cfg.batch_size, n_members);
        let steps = steps_for(epochs, cfg.batch_size, n_members);
        let c = get_noise_multiplier(
            epsilon,
            cfg.delta,
            rate,
            steps,
            &AccountingHistory::with_default_orders(),
            &cfg.calibration(),
        )?;
        Ok(Phase {
            sigma: c.noise_multiplier,
            rate,
            steps,
            epsilon: c.epsilon,
        })
    }
}

struct Phase {
    sigma: f64,
    rate: f64,
    steps: u64,
    epsilon: f64,
}

fn sample_rate(batch: usize, n: usize) -> f64 {
    (batch as f64 / n as f64).min(1.0)
}

fn steps_for(epochs: usize, batch: usize, n: usize) -> u64 {
    epochs as u64 * math::ceil(n as f64 / batch as f64) as u64
}

/// Reusable buffers for clipped noisy steps over one member set.
struct PhaseRunner<'d> {
    data: &'d LabeledDataset,
    members: &'d [usize],
    sigma: f64,
    rate: f64,
    clip: f64,
    lr: f64,
    normalizer: f64,
    ws: Workspace,
    grad: Vec<f64>,
    sum: Vec<f64>,
}

impl<'d> PhaseRunner<'d> {
    fn new(model: &ModelParams, data: &'d LabeledDataset, members: &'d [usize], sigma: f64, rate: f64, cfg: &TrainConfig) -> Self {
        Self {
            data,
            members,
            sigma,
            rate,
            clip: cfg.clip_norm,
            lr: cfg.learning_rate,
            normalizer: (rate * members.len() as f64).max(1.0),
            ws: Workspace::new(model.architecture()),
            grad: vec![0.0; model.len()],
            sum: vec![0.0; model.len()],
        }
    }

    fn step(&mut self, model: &mut ModelParams, rng: &mut ChaCha8Rng, hook: &mut dyn TrainHook) -> Result<()> {
        let rate = self.rate;
        let batch: Vec<usize> = self
            .members
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < rate)
            .collect();
        self.apply(model, &batch, rng, hook)
    }

    fn apply(&mut self, model: &mut ModelParams, batch: &[usize], rng: &mut ChaCha8Rng, hook: &mut dyn TrainHook) -> Result<()> {
        self.sum.iter_mut().for_each(|v| *v = 0.0);
        let mut max_norm: f64 = 0.0;
        for &i in batch {
            model.example_gradient(self.data.example(i), self.data.label(i), &mut self.ws, &mut self.grad)?;
            let norm = clip_in_place(&mut self.grad, self.clip);
            debug_assert!(norm <= self.clip);
            max_norm = max_norm.max(norm);
            for (s, g) in self.sum.iter_mut().zip(&self.grad) {
                *s += g;
            }
        }
        hook.on_clipped_batch(max_norm, batch.len());
        noise_and_normalize(&mut self.sum, self.sigma, self.clip, self.normalizer, rng)?;
        sgd_step(model.as_mut_slice(), &self.sum, self.lr)
    }
}

/// Runs `phase.steps` Poisson batches; returns the number of steps taken.
fn run_phase(
    model: &mut ModelParams,
    data: &LabeledDataset,
    members: &[usize],
    phase: &Phase,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    hook: &mut dyn TrainHook,
) -> Result<u64> {
    let mut runner = PhaseRunner::new(model, data, members, phase.sigma, phase.rate, cfg);
    let batch_rng = ChaCha8Rng::from_rng(&mut *rng);
    let batches = PoissonBatches::uniform(members.to_vec(), phase.rate, phase.steps as usize, batch_rng)?;
    for batch in batches {
        runner.apply(model, &batch, rng, hook)?;
    }
    Ok(phase.steps)
}

/// Spec-op style entry points.
pub fn train_pdpsgd(data: &LabeledDataset, spec: &PrivacySpec, config: &TrainConfig) -> Result<TrainOutcome> {
    Trainer::new(data, config, &mut ()).pdpsgd(spec)
}

pub fn train_dpsgd_uniform(data: &LabeledDataset, epsilon: f64, config: &TrainConfig) -> Result<TrainOutcome> {
    Trainer::new(data, config, &mut ()).dpsgd_uniform(epsilon)
}

pub fn train_sampling_baseline(data: &LabeledDataset, spec: &PrivacySpec, config: &TrainConfig) -> Result<TrainOutcome> {
    Trainer::new(data, config, &mut ()).sampling_baseline(spec)
}

pub fn train_adapdp(data: &LabeledDataset, spec: &PrivacySpec, config: &TrainConfig) -> Result<TrainOutcome> {
    Trainer::new(data, config, &mut ()).adapdp(spec)
}
