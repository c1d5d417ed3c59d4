//! Budget-waste losses and the per-round threshold search.

use alloc::vec::Vec;

use crate::error::{invalid_arg, Error, Result};

/// Budget lost below the threshold (`waste_u`, users who may go unsampled)
/// and above it (`waste_s`, budget cut off by the threshold).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WasteBreakdown {
    pub waste_u: f64,
    pub waste_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LossKind {
    /// `w1·waste_u + w2·waste_s`.
    Fixed { w1: f64, w2: f64 },
    /// Harmonic mean `2·u·s/(u + s)`.
    Adaptive,
}

impl LossKind {
    fn validate(&self) -> Result<()> {
        match *self {
            LossKind::Fixed { w1, w2 } if !(w1 >= 0.0 && w2 >= 0.0 && w1 + w2 > 0.0) => Err(
                invalid_arg!("loss weights must be non-negative with a positive sum, got ({w1}, {w2})"),
            ),
            _ => Ok(()),
        }
    }

    fn combine(&self, w: WasteBreakdown) -> f64 {
        match *self {
            LossKind::Fixed { w1, w2 } => w1 * w.waste_u + w2 * w.waste_s,
            LossKind::Adaptive => harmonic(w),
        }
    }
}

fn harmonic(w: WasteBreakdown) -> f64 {
    let sum = w.waste_u + w.waste_s;
    if sum == 0.0 {
        0.0
    } else {
        2.0 * w.waste_u * w.waste_s / sum
    }
}

fn range(budgets: &[f64]) -> Result<(f64, f64)> {
    if budgets.is_empty() {
        return Err(invalid_arg!("no privacy budgets given"));
    }
    let lo = budgets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = budgets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

fn check_threshold(budgets: &[f64], tau: f64) -> Result<()> {
    let (lo, hi) = range(budgets)?;
    if !(tau >= lo && tau <= hi) {
        return Err(invalid_arg!("threshold {tau} outside budget range [{lo}, {hi}]"));
    }
    Ok(())
}

/// Waste at threshold `tau`; users with `ε_i == τ` count toward neither sum.
pub fn waste_components(budgets: &[f64], tau: f64) -> Result<WasteBreakdown> {
    check_threshold(budgets, tau)?;
    let expm1: Vec<f64> = budgets.iter().map(|&e| libm::expm1(e)).collect();
    Ok(waste_with(budgets, &expm1, tau))
}

fn waste_with(budgets: &[f64], expm1_budgets: &[f64], tau: f64) -> WasteBreakdown {
    let denom = libm::expm1(tau);
    let mut waste_u = 0.0;
    let mut waste_s = 0.0;
    for (&e, &em1) in budgets.iter().zip(expm1_budgets) {
        if e < tau {
            waste_u += e * (1.0 - em1 / denom);
        } else if e > tau {
            waste_s += e - tau;
        }
    }
    WasteBreakdown { waste_u, waste_s }
}

pub fn loss_fixed(budgets: &[f64], tau: f64, w1: f64, w2: f64) -> Result<f64> {
    let kind = LossKind::Fixed { w1, w2 };
    kind.validate()?;
    Ok(kind.combine(waste_components(budgets, tau)?))
}

pub fn loss_adaptive(budgets: &[f64], tau: f64) -> Result<f64> {
    Ok(harmonic(waste_components(budgets, tau)?))
}

pub fn loss(budgets: &[f64], tau: f64, kind: LossKind) -> Result<f64> {
    kind.validate()?;
    Ok(kind.combine(waste_components(budgets, tau)?))
}

/// Uniform grid of `points` thresholds on `[min Φ, max Φ]`, endpoints exact.
pub fn threshold_grid(budgets: &[f64], points: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range(budgets)?;
    if points < 2 {
        return Err(invalid_arg!("threshold grid needs at least 2 points"));
    }
    let last = points - 1;
    Ok((0..points)
        .map(|j| {
            if j == last {
                hi
            } else {
                lo + (hi - lo) * (j as f64) / (last as f64)
            }
        })
        .collect())
}

/// Loss-minimizing threshold over [`threshold_grid`]; ties go to the largest
/// threshold.
pub fn optimize_threshold(budgets: &[f64], kind: LossKind, grid_points: usize) -> Result<f64> {
    kind.validate()?;
    let (_, hi) = range(budgets)?;
    if !(hi > 0.0) {
        return Err(Error::BudgetExhausted("every privacy budget is zero".into()));
    }
    let grid = threshold_grid(budgets, grid_points)?;
    let expm1: Vec<f64> = budgets.iter().map(|&e| libm::expm1(e)).collect();
    let mut best = (f64::INFINITY, grid[0]);
    for &tau in &grid {
        let l = kind.combine(waste_with(budgets, &expm1, tau));
        if l <= best.0 {
            best = (l, tau);
        }
    }
    Ok(best.1)
}
