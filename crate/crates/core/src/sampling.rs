//! Budget-dependent inclusion probabilities and Poisson samplers.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid_arg, Result};

/// Threshold `τ` together with one inclusion probability per user.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingPlan {
    threshold: f64,
    probabilities: Vec<f64>,
}

impl SamplingPlan {
    /// A plan with explicit probabilities, each in `[0, 1]`.
    pub fn from_parts(threshold: f64, probabilities: Vec<f64>) -> Result<Self> {
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid_arg!("inclusion probability {p} outside [0, 1]"));
        }
        Ok(Self {
            threshold,
            probabilities,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Expected number of included users.
    pub fn expected_size(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// `π_i = (e^{ε_i} − 1)/(e^τ − 1)` below the threshold and 1 at or above it.
pub fn inclusion_probability(epsilon: f64, threshold: f64) -> f64 {
    if epsilon >= threshold {
        1.0
    } else {
        (libm::expm1(epsilon) / libm::expm1(threshold)).clamp(0.0, 1.0)
    }
}

pub fn sampling_probabilities(budgets: &[f64], threshold: f64) -> Result<SamplingPlan> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(invalid_arg!("threshold must be positive, got {threshold}"));
    }
    if let Some(e) = budgets.iter().find(|e| !(**e >= 0.0)) {
        return Err(invalid_arg!("privacy budget {e} must be non-negative"));
    }
    Ok(SamplingPlan {
        threshold,
        probabilities: budgets
            .iter()
            .map(|&e| inclusion_probability(e, threshold))
            .collect(),
    })
}

/// One Poisson draw: keeps `indices[i]` independently with probability
/// `plan.probabilities()[i]`.
pub fn round_sample<R: Rng + ?Sized>(
    indices: &[usize],
    plan: &SamplingPlan,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if indices.len() != plan.len() {
        return Err(invalid_arg!(
            "plan covers {} users but {} indices were given",
            plan.len(),
            indices.len()
        ));
    }
    Ok(indices
        .iter()
        .zip(&plan.probabilities)
        .filter(|(_, &p)| include(rng, p))
        .map(|(&i, _)| i)
        .collect())
}

/// `y ~ U[0, 1)` and keep iff `y < rate`, which has probability exactly `rate`
/// (0 never includes, 1 always does).
#[inline]
fn include<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> bool {
    rng.random::<f64>() < rate
}

/// Yields `n_batches` independent Poisson samples of `members`, member `k`
/// being kept with probability `rates[k]`. Empty batches are yielded as-is.
#[derive(Debug)]
pub struct PoissonBatches<R> {
    members: Vec<usize>,
    rates: Rates,
    remaining: usize,
    rng: R,
}

#[derive(Debug)]
enum Rates {
    Uniform(f64),
    PerMember(Vec<f64>),
}

impl<R: Rng> PoissonBatches<R> {
    /// Every member shares the same rate.
    pub fn uniform(members: Vec<usize>, rate: f64, n_batches: usize, rng: R) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(invalid_arg!("sampling rate {rate} outside [0, 1]"));
        }
        Ok(Self {
            members,
            rates: Rates::Uniform(rate),
            remaining: n_batches,
            rng,
        })
    }

    pub fn per_member(
        members: Vec<usize>,
        rates: Vec<f64>,
        n_batches: usize,
        rng: R,
    ) -> Result<Self> {
        if members.len() != rates.len() {
            return Err(invalid_arg!("{} members but {} rates", members.len(), rates.len()));
        }
        if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(invalid_arg!("sampling rate {r} outside [0, 1]"));
        }
        Ok(Self {
            members,
            rates: Rates::PerMember(rates),
            remaining: n_batches,
            rng,
        })
    }

    /// Hands the generator back, e.g. to continue a seeded stream.
    pub fn into_rng(self) -> R {
        self.rng
    }
}

impl<R: Rng> Iterator for PoissonBatches<R> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let rng = &mut self.rng;
        let batch = match &self.rates {
            Rates::Uniform(rate) => self
                .members
                .iter()
                .copied()
                .filter(|_| include(rng, *rate))
                .collect(),
            Rates::PerMember(rates) => self
                .members
                .iter()
                .zip(rates)
                .filter(|(_, &r)| include(rng, r))
                .map(|(&m, _)| m)
                .collect(),
        };
        Some(batch)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl<R: Rng> ExactSizeIterator for PoissonBatches<R> {}

/// Batches over positions `0..plan.len()` at the plan's per-user rates.
pub fn pdp_poisson_batches<R: Rng>(
    plan: &SamplingPlan,
    n_batches: usize,
    rng: R,
) -> Result<PoissonBatches<R>> {
    if n_batches == 0 {
        return Err(invalid_arg!("n_batches must be at least 1"));
    }
    PoissonBatches::per_member(
        (0..plan.len()).collect(),
        plan.probabilities.clone(),
        n_batches,
        rng,
    )
}
