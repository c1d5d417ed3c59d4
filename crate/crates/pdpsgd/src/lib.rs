//! Experiment harness for personalized DP-SGD: IDX ingestion, flat config
//! files, seeded runs and sweeps, and CSV/JSON metrics.

pub mod config;
pub mod error;
pub mod experiment;
pub mod idx;
pub mod output;

pub use config::{Algorithm, DataSource, ExperimentConfig};
pub use error::{Error, Result};
pub use experiment::{run_experiment, run_sweep, ExperimentResult, SweepKind, SweepResult};
pub use idx::{load_idx, parse_idx, write_idx, IdxData};
