//! Noise-multiplier calibration by exponential bracketing and bisection.

use alloc::vec::Vec;

use crate::accountant::{default_orders, rdp_to_dp, subsampled_gaussian_rdp, RdpCurve};
use crate::error::{invalid_arg, Error, Result};

/// One completed training phase as seen by the accountant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistoryEntry {
    pub noise_multiplier: f64,
    pub sample_rate: f64,
    pub steps: u64,
}

/// Append-only record of `(σ, q, steps)` for completed rounds, kept together
/// with its composed RDP curve.
#[derive(Debug, Clone, PartialEq)]
pub struct AccountingHistory {
    entries: Vec<HistoryEntry>,
    composed: RdpCurve,
}

impl AccountingHistory {
    pub fn new(orders: &[f64]) -> Result<Self> {
        Ok(Self {
            entries: Vec::new(),
            composed: RdpCurve::zeros(orders)?,
        })
    }

    pub fn with_default_orders() -> Self {
        Self::new(&default_orders()).expect("default grid is valid")
    }

    pub fn push(&mut self, noise_multiplier: f64, sample_rate: f64, steps: u64) -> Result<()> {
        let curve =
            subsampled_gaussian_rdp(noise_multiplier, sample_rate, steps, self.composed.orders())?;
        self.composed = self.composed.compose(&curve)?;
        self.entries.push(HistoryEntry {
            noise_multiplier,
            sample_rate,
            steps,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn orders(&self) -> &[f64] {
        self.composed.orders()
    }

    /// Composed RDP of every recorded phase.
    pub fn curve(&self) -> &RdpCurve {
        &self.composed
    }

    pub fn epsilon(&self, delta: f64) -> Result<f64> {
        Ok(rdp_to_dp(&self.composed, delta)?.epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Accept σ once `ε_t − ε(σ) ≤ tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// The upper bracket starts here and is doubled before the first
    /// evaluation.
    pub initial_high: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.01,
            max_iterations: 1000,
            initial_high: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibrated {
    pub noise_multiplier: f64,
    /// ε reached at the target δ, history included.
    pub epsilon: f64,
}

/// Finds σ such that running `steps` more subsampled-Gaussian steps at rate
/// `sample_rate` on top of `history` lands in `[ε_t − β, ε_t]` at `δ_t`.
///
/// The history is not modified; callers append once the phase has run.
pub fn get_noise_multiplier(
    target_epsilon: f64,
    target_delta: f64,
    sample_rate: f64,
    steps: u64,
    history: &AccountingHistory,
    options: &CalibrationOptions,
) -> Result<Calibrated> {
    if !(target_epsilon > 0.0) || !target_epsilon.is_finite() {
        return Err(invalid_arg!("target epsilon must be positive, got {target_epsilon}"));
    }
    if !(sample_rate > 0.0 && sample_rate <= 1.0) {
        return Err(invalid_arg!("sample rate must lie in (0, 1], got {sample_rate}"));
    }
    if steps == 0 {
        return Err(invalid_arg!("steps must be at least 1"));
    }
    if !(options.tolerance > 0.0) {
        return Err(invalid_arg!("tolerance must be positive"));
    }
    let floor = history.epsilon(target_delta)?;
    if floor >= target_epsilon {
        return Err(Error::BudgetExhausted(alloc::format!(
            "history already spends epsilon {floor:.6} >= target {target_epsilon}"
        )));
    }

    let orders = history.orders();
    let epsilon_at = |sigma: f64| -> Result<f64> {
        let phase = subsampled_gaussian_rdp(sigma, sample_rate, steps, orders)?;
        Ok(rdp_to_dp(&history.curve().compose(&phase)?, target_delta)?.epsilon)
    };

    let beta = options.tolerance;
    let mut iterations = 0;
    let mut high = options.initial_high;
    let mut eps_high = f64::INFINITY;
    while eps_high > target_epsilon {
        iterations += 1;
        if iterations > options.max_iterations || !high.is_finite() {
            return Err(Error::Convergence { iterations });
        }
        high *= 2.0;
        eps_high = epsilon_at(high)?;
    }
    if target_epsilon - eps_high <= beta {
        return Ok(Calibrated {
            noise_multiplier: high,
            epsilon: eps_high,
        });
    }

    // invariant: ε(high) ≤ ε_t < ε(low), with ε(0⁺) = ∞
    let mut low = 0.0;
    loop {
        iterations += 1;
        if iterations > options.max_iterations {
            return Err(Error::Convergence { iterations });
        }
        let mid = 0.5 * (low + high);
        let eps_mid = epsilon_at(mid)?;
        if eps_mid <= target_epsilon {
            high = mid;
            if target_epsilon - eps_mid <= beta {
                return Ok(Calibrated {
                    noise_multiplier: mid,
                    epsilon: eps_mid,
                });
            }
        } else {
            low = mid;
        }
    }
}
