//! Per-user privacy requirements and the round-by-round budget ledger.
//!
//! A round at threshold `τ` with per-user inclusion probabilities `π_i`
//! costs each sampled user the round's accountant ε (clamped at the user's
//! remaining budget) and every user `π_i·δ` of failure probability. Over at
//! most `R_max` rounds the accumulated δ is therefore at most `R_max·δ`.

use alloc::vec::Vec;

use crate::error::{invalid_arg, Error, Result};
use crate::sampling::SamplingPlan;
use crate::UserId;

/// One user's requirement `(ε_i, δ_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserPrivacy {
    pub id: UserId,
    pub epsilon: f64,
    pub delta: f64,
}

/// Requirement sets `Φ = {ε_i}`, `Δ = {δ_i}` plus the base δ each round's
/// mechanism is run at.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrivacySpec {
    users: Vec<UserPrivacy>,
    base_delta: f64,
}

impl PrivacySpec {
    pub fn new(users: Vec<UserPrivacy>, base_delta: f64) -> Result<Self> {
        if !(base_delta > 0.0 && base_delta < 1.0) {
            return Err(invalid_arg!("base delta must lie in (0, 1), got {base_delta}"));
        }
        for u in &users {
            if !(u.epsilon >= 0.0) || !u.epsilon.is_finite() {
                return Err(invalid_arg!("user {}: epsilon {} must be finite and >= 0", u.id, u.epsilon));
            }
            if !(u.delta > 0.0 && u.delta < 1.0) {
                return Err(invalid_arg!("user {}: delta {} must lie in (0, 1)", u.id, u.delta));
            }
        }
        let mut ids: Vec<UserId> = users.iter().map(|u| u.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid_arg!("user ids must be unique"));
        }
        Ok(Self { users, base_delta })
    }

    /// Users `ids[i]` with budget `epsilons[i]`; every `δ_i` is set to the
    /// `r_max·δ` a run of at most `r_max` rounds guarantees.
    pub fn from_budgets(
        ids: &[UserId],
        epsilons: &[f64],
        base_delta: f64,
        r_max: usize,
    ) -> Result<Self> {
        if ids.len() != epsilons.len() {
            return Err(invalid_arg!("{} user ids but {} budgets", ids.len(), epsilons.len()));
        }
        let delta = base_delta * r_max as f64;
        let users = ids
            .iter()
            .zip(epsilons)
            .map(|(&id, &epsilon)| UserPrivacy { id, epsilon, delta })
            .collect();
        Self::new(users, base_delta)
    }

    pub fn users(&self) -> &[UserPrivacy] {
        &self.users
    }

    pub fn base_delta(&self) -> f64 {
        self.base_delta
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.epsilon).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LedgerEntry {
    pub id: UserId,
    pub initial: f64,
    pub remaining: f64,
    /// `Σ_R π_{i,R}`; the accumulated δ is this times the base δ.
    pub inclusion_mass: f64,
}

impl LedgerEntry {
    pub fn spent(&self) -> f64 {
        self.initial - self.remaining
    }
}

pub const DEFAULT_MAX_ROUNDS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BudgetLedger {
    entries: Vec<LedgerEntry>,
    base_delta: f64,
    rounds_elapsed: usize,
    r_max: usize,
}

impl BudgetLedger {
    pub fn new(spec: &PrivacySpec, r_max: usize) -> Result<Self> {
        if r_max == 0 {
            return Err(invalid_arg!("round cap must be at least 1"));
        }
        let mut entries: Vec<LedgerEntry> = spec
            .users
            .iter()
            .map(|u| LedgerEntry {
                id: u.id,
                initial: u.epsilon,
                remaining: u.epsilon,
                inclusion_mass: 0.0,
            })
            .collect();
        entries.sort_by_key(|e| e.id);
        Ok(Self {
            entries,
            base_delta: spec.base_delta,
            rounds_elapsed: 0,
            r_max,
        })
    }

    /// Rebuilds a ledger from saved state without checking its invariants.
    pub fn restore(
        mut entries: Vec<LedgerEntry>,
        base_delta: f64,
        rounds_elapsed: usize,
        r_max: usize,
    ) -> Self {
        entries.sort_by_key(|e| e.id);
        Self {
            entries,
            base_delta,
            rounds_elapsed,
            r_max,
        }
    }

    /// Entries ordered by user id.
    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn base_delta(&self) -> f64 {
        self.base_delta
    }

    pub fn rounds_elapsed(&self) -> usize {
        self.rounds_elapsed
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Position of `id` in [`entries`](Self::entries).
    pub fn position(&self, id: UserId) -> Option<usize> {
        self.entries.binary_search_by_key(&id, |e| e.id).ok()
    }

    pub fn accumulated_delta(&self, position: usize) -> f64 {
        self.entries[position].inclusion_mass * self.base_delta
    }

    /// Remaining budgets in entry order, exhausted users included as 0.
    pub fn remaining_budgets(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.remaining).collect()
    }

    /// `(id, remaining)` for users that still have budget, by id.
    pub fn active_budgets(&self) -> Vec<(UserId, f64)> {
        self.entries
            .iter()
            .filter(|e| e.remaining > 0.0)
            .map(|e| (e.id, e.remaining))
            .collect()
    }

    /// Charges one round. `plan` lists `π_i` in entry order; every user is
    /// charged `π_i·δ` whether or not the draw included them, and each user
    /// in `sampled` loses `min(remaining, epsilon_spent)` of budget.
    pub fn charge_round(
        &mut self,
        sampled: &[UserId],
        epsilon_spent: f64,
        plan: &SamplingPlan,
    ) -> Result<()> {
        if self.rounds_elapsed >= self.r_max {
            return Err(Error::RoundCap { r_max: self.r_max });
        }
        if !(epsilon_spent >= 0.0) || !epsilon_spent.is_finite() {
            return Err(invalid_arg!("round epsilon must be finite and >= 0, got {epsilon_spent}"));
        }
        if plan.len() != self.entries.len() {
            return Err(invalid_arg!(
                "plan covers {} users, ledger holds {}",
                plan.len(),
                self.entries.len()
            ));
        }
        let mut hit = alloc::vec![false; self.entries.len()];
        for &id in sampled {
            let pos = self
                .position(id)
                .ok_or_else(|| invalid_arg!("sampled user {id} is not in the ledger"))?;
            hit[pos] = true;
        }
        for ((entry, &pi), charged) in self.entries.iter_mut().zip(plan.probabilities()).zip(hit) {
            entry.inclusion_mass += pi;
            if charged {
                entry.remaining = (entry.remaining - epsilon_spent).max(0.0);
            }
        }
        self.rounds_elapsed += 1;
        Ok(())
    }

    pub fn guarantee_report(&self) -> GuaranteeReport {
        let delta_bound = self.r_max as f64 * self.base_delta;
        let users: Vec<UserGuarantee> = self
            .entries
            .iter()
            .map(|e| {
                let spent = e.spent();
                UserGuarantee {
                    id: e.id,
                    budget: e.initial,
                    spent,
                    spent_ok: e.remaining >= 0.0 && spent <= e.initial,
                    accumulated_delta: e.inclusion_mass * self.base_delta,
                    delta_bound,
                    // compared in units of δ so the check is exact
                    delta_ok: e.inclusion_mass <= self.r_max as f64,
                }
            })
            .collect();
        GuaranteeReport {
            all_ok: users.iter().all(|u| u.spent_ok && u.delta_ok),
            rounds_elapsed: self.rounds_elapsed,
            users,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserGuarantee {
    pub id: UserId,
    pub budget: f64,
    pub spent: f64,
    pub spent_ok: bool,
    pub accumulated_delta: f64,
    pub delta_bound: f64,
    pub delta_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GuaranteeReport {
    pub all_ok: bool,
    pub rounds_elapsed: usize,
    pub users: Vec<UserGuarantee>,
}
