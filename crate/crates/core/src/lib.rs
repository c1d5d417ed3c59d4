//! Personalized differentially private SGD.
//!
//! Users carry their own privacy budgets `ε_i`. Training proceeds in rounds:
//! each round picks a threshold `τ`, samples every example with a
//! budget-dependent probability, runs clipped and noised SGD calibrated to
//! `(τ, δ)`, and charges the sampled users in a per-user ledger.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and experiment bookkeeping live in the `pdpsgd` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod accountant;
pub mod calibration;
pub mod data;
pub mod dpsgd;
mod error;
pub mod ledger;
mod math;
pub mod model;
pub mod sampling;
pub mod threshold;
pub mod trainer;

pub use accountant::{IndividualRdp, RdpCurve};
pub use calibration::{get_noise_multiplier, AccountingHistory, CalibrationOptions};
pub use data::{generate_epsilons, synthetic_dataset, EpsilonShape, LabeledDataset};
pub use error::{Error, Result};
pub use ledger::{BudgetLedger, GuaranteeReport, PrivacySpec, UserPrivacy};
pub use model::{Architecture, ModelParams};
pub use sampling::SamplingPlan;
pub use threshold::{LossKind, WasteBreakdown};
pub use trainer::{EnsembleModel, RoundRecord, RunMetrics, TrainConfig};

/// Stable identifier of a data owner. One example belongs to one user.
pub type UserId = u64;
