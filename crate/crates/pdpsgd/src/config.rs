//! Experiment configuration: a flat `key = value` file whose keys match
//! the kebab-case command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pdpsgd_core::{EpsilonShape, LossKind, TrainConfig};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    PdpsgdFixed,
    PdpsgdAdaptive,
    Dpsgd,
    Sampling,
    Adapdp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::PdpsgdFixed,
        Algorithm::PdpsgdAdaptive,
        Algorithm::Dpsgd,
        Algorithm::Sampling,
        Algorithm::Adapdp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PdpsgdFixed => "pdpsgd-fixed",
            Algorithm::PdpsgdAdaptive => "pdpsgd-adaptive",
            Algorithm::Dpsgd => "dpsgd",
            Algorithm::Sampling => "sampling",
            Algorithm::Adapdp => "adapdp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Usage(format!("algorithm: unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DataSource {
    Synthetic {
        n: usize,
        dim: usize,
        classes: usize,
        separation: f64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub data: DataSource,
    /// Examples kept for training after the seeded shuffle; the rest are
    /// the test set.
    pub train_size: usize,
    pub data_seed: u64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub skew: f64,
    pub groups: usize,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    /// Budget of the uniform baseline; defaults to `eps_lo`.
    pub dpsgd_epsilon: Option<f64>,
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub rounds: usize,
    pub epochs: usize,
    pub delta: f64,
    pub tolerance: f64,
    pub grid_points: usize,
    pub r_max: usize,
    pub hidden: Vec<usize>,
    pub adapdp_noise: Option<f64>,
    pub max_steps: u64,
    pub seeds: usize,
    pub seed: Option<u64>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            algorithm: Algorithm::PdpsgdAdaptive,
            data: DataSource::Synthetic {
                n: 5000,
                dim: 20,
                classes: 5,
                separation: 4.3,
            },
            train_size: 4000,
            data_seed: 0,
            eps_lo: 0.5,
            eps_hi: 1.0,
            skew: 0.0,
            groups: 20,
            c1: None,
            c2: None,
            dpsgd_epsilon: None,
            w1: None,
            w2: None,
            learning_rate: 0.5,
            clip_norm: t.clip_norm,
            batch_size: t.batch_size,
            rounds: 2,
            epochs: 10,
            delta: t.delta,
            tolerance: t.tolerance,
            grid_points: t.grid_points,
            r_max: t.r_max,
            hidden: Vec::new(),
            adapdp_noise: None,
            max_steps: t.max_steps_per_round,
            seeds: 1,
            seed: None,
            output: PathBuf::from("results"),
        }
    }
}

/// Every key `set` accepts.
pub const KEYS: &[&str] = &[
    "algorithm",
    "dataset",
    "images",
    "labels",
    "synthetic-n",
    "synthetic-dim",
    "synthetic-classes",
    "separation",
    "train-size",
    "data-seed",
    "eps-lo",
    "eps-hi",
    "skew",
    "groups",
    "c1",
    "c2",
    "dpsgd-epsilon",
    "w1",
    "w2",
    "learning-rate",
    "clip-norm",
    "batch-size",
    "rounds",
    "epochs",
    "delta",
    "tolerance",
    "grid-points",
    "r-max",
    "hidden",
    "adapdp-noise",
    "max-steps",
    "seeds",
    "seed",
    "output",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Usage(format!("{key}: cannot parse `{value}`")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.is_empty() || value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "algorithm" => self.algorithm = value.parse()?,
            "dataset" => {
                self.data = match (value, &self.data) {
                    ("synthetic", DataSource::Synthetic { .. }) | ("idx", DataSource::Idx { .. }) => {
                        return Ok(())
                    }
                    ("synthetic", _) => ExperimentConfig::default().data,
                    ("idx", _) => DataSource::Idx {
                        images: PathBuf::new(),
                        labels: PathBuf::new(),
                    },
                    _ => return Err(Error::Usage(format!("dataset: expected `synthetic` or `idx`, got `{value}`"))),
                }
            }
            "images" | "labels" => {
                if !matches!(self.data, DataSource::Idx { .. }) {
                    self.set("dataset", "idx")?;
                }
                if let DataSource::Idx { images, labels } = &mut self.data {
                    let target = if k == "images" { images } else { labels };
                    *target = PathBuf::from(value);
                }
            }
            "synthetic-n" | "synthetic-dim" | "synthetic-classes" | "separation" => {
                if !matches!(self.data, DataSource::Synthetic { .. }) {
                    self.set("dataset", "synthetic")?;
                }
                if let DataSource::Synthetic {
                    n,
                    dim,
                    classes,
                    separation,
                } = &mut self.data
                {
                    match k {
                        "synthetic-n" => *n = parse(k, value)?,
                        "synthetic-dim" => *dim = parse(k, value)?,
                        "synthetic-classes" => *classes = parse(k, value)?,
                        _ => *separation = parse(k, value)?,
                    }
                }
            }
            "train-size" => self.train_size = parse(k, value)?,
            "data-seed" => self.data_seed = parse(k, value)?,
            "eps-lo" => self.eps_lo = parse(k, value)?,
            "eps-hi" => self.eps_hi = parse(k, value)?,
            "skew" => self.skew = parse(k, value)?,
            "groups" => self.groups = parse(k, value)?,
            "c1" => self.c1 = parse_opt(k, value)?,
            "c2" => self.c2 = parse_opt(k, value)?,
            "dpsgd-epsilon" => self.dpsgd_epsilon = parse_opt(k, value)?,
            "w1" => self.w1 = parse_opt(k, value)?,
            "w2" => self.w2 = parse_opt(k, value)?,
            "learning-rate" => self.learning_rate = parse(k, value)?,
            "clip-norm" => self.clip_norm = parse(k, value)?,
            "batch-size" => self.batch_size = parse(k, value)?,
            "rounds" => self.rounds = parse(k, value)?,
            "epochs" => self.epochs = parse(k, value)?,
            "delta" => self.delta = parse(k, value)?,
            "tolerance" => self.tolerance = parse(k, value)?,
            "grid-points" => self.grid_points = parse(k, value)?,
            "r-max" => self.r_max = parse(k, value)?,
            "hidden" => {
                self.hidden = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse(k, s))
                    .collect::<Result<_>>()?
            }
            "adapdp-noise" => self.adapdp_noise = parse_opt(k, value)?,
            "max-steps" => self.max_steps = parse(k, value)?,
            "seeds" => self.seeds = parse(k, value)?,
            "seed" => self.seed = parse_opt(k, value)?,
            "output" => self.output = PathBuf::from(value),
            _ => return Err(Error::Usage(format!("{key}: unknown key"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |field: &str, msg: &str| Err(Error::Usage(format!("{field}: {msg}")));
        if !(self.eps_lo < self.eps_hi) {
            return usage("eps-lo", "must be below eps-hi");
        }
        if self.seeds == 0 {
            return usage("seeds", "must be at least 1");
        }
        if self.groups < 2 {
            return usage("groups", "must be at least 2");
        }
        if let (Some(a), Some(b)) = (self.w1, self.w2) {
            if a < 0.0 || b < 0.0 || a + b <= 0.0 {
                return usage("w1", "weights must be >= 0 with a positive sum");
            }
        }
        if let DataSource::Idx { images, labels } = &self.data {
            if images.as_os_str().is_empty() || labels.as_os_str().is_empty() {
                return usage("images", "idx data needs both images and labels paths");
            }
        }
        if let DataSource::Synthetic { n, classes, .. } = &self.data {
            if self.train_size >= *n {
                return usage("train-size", "must leave at least one test example");
            }
            if *classes < 2 {
                return usage("synthetic-classes", "must be at least 2");
            }
        }
        self.train_config(0)
            .validate()
            .map_err(|e| Error::Usage(format!("training: {e}")))
    }

    pub fn shape(&self) -> EpsilonShape {
        let base = EpsilonShape::for_skew(self.skew);
        EpsilonShape {
            k: self.skew,
            c1: self.c1.unwrap_or(base.c1),
            c2: self.c2.unwrap_or(base.c2),
        }
    }

    pub fn loss(&self) -> LossKind {
        let explicit = match (self.w1, self.w2) {
            (Some(w1), Some(w2)) => Some((w1, w2)),
            (Some(w1), None) => Some((w1, 1.0 - w1)),
            (None, Some(w2)) => Some((1.0 - w2, w2)),
            (None, None) => None,
        };
        match (self.algorithm, explicit) {
            (Algorithm::PdpsgdAdaptive, _) => LossKind::Adaptive,
            (_, Some((w1, w2))) => LossKind::Fixed { w1, w2 },
            (Algorithm::PdpsgdFixed, None) => LossKind::Fixed { w1: 0.7, w2: 0.3 },
            // the trainers pick their own fixed weights
            (_, None) => LossKind::Adaptive,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            clip_norm: self.clip_norm,
            batch_size: self.batch_size,
            rounds: self.rounds,
            epochs_per_round: self.epochs,
            delta: self.delta,
            tolerance: self.tolerance,
            loss: self.loss(),
            grid_points: self.grid_points,
            r_max: self.r_max,
            hidden: self.hidden.clone(),
            adapdp_noise_multiplier: self.adapdp_noise,
            max_steps_per_round: self.max_steps,
            seed,
        }
    }

    pub fn dpsgd_epsilon(&self) -> f64 {
        self.dpsgd_epsilon.unwrap_or(self.eps_lo)
    }

    /// Explicit seed, else `PDPSGD_SEED`, else 0.
    pub fn base_seed(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var("PDPSGD_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("PDPSGD_SEED: cannot parse `{v}`"))),
            Err(_) => Ok(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_and_overrides() {
        let mut c = ExperimentConfig::default();
        c.apply_text(
            "# comment\nalgorithm = dpsgd\nrounds=4 # trailing\n\nhidden = 64, 32\nimages = a.idx\nlabels = b.idx\n",
        )
        .unwrap();
        assert_eq!(c.algorithm, Algorithm::Dpsgd);
        assert_eq!(c.rounds, 4);
        assert_eq!(c.hidden, vec![64, 32]);
        assert!(matches!(c.data, DataSource::Idx { .. }));
        c.set("rounds", "2").unwrap();
        c.set("learning_rate", "0.1").unwrap();
        assert_eq!(c.rounds, 2);
        assert_eq!(c.learning_rate, 0.1);
    }

    #[test]
    fn usage_errors_name_the_field() {
        let mut c = ExperimentConfig::default();
        let e = c.set("algorithm", "sgd").unwrap_err().to_string();
        assert!(e.contains("algorithm"), "{e}");
        let e = c.set("rounds", "many").unwrap_err().to_string();
        assert!(e.contains("rounds"));
        assert!(c.set("colour", "red").is_err());
        assert!(c.apply_text("rounds 3").is_err());
        c.eps_hi = 0.2;
        assert!(c.validate().unwrap_err().to_string().contains("eps-lo"));
    }

    #[test]
    fn every_key_is_accepted() {
        for k in KEYS {
            let v = match *k {
                "algorithm" => "sampling",
                "dataset" => "synthetic",
                "images" | "labels" | "output" => "x",
                "hidden" => "8",
                _ => "1",
            };
            ExperimentConfig::default().set(k, v).unwrap();
        }
    }

    #[test]
    fn loss_selection() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.loss(), LossKind::Adaptive);
        c.algorithm = Algorithm::PdpsgdFixed;
        assert_eq!(c.loss(), LossKind::Fixed { w1: 0.7, w2: 0.3 });
        c.w1 = Some(0.4);
        assert_eq!(c.loss(), LossKind::Fixed { w1: 0.4, w2: 0.6 });
        c.algorithm = Algorithm::Adapdp;
        c.w1 = None;
        assert_eq!(c.loss(), LossKind::Adaptive);
    }
}
