//! Metrics files: a per-round CSV and a JSON summary next to it.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

pub const CSV_HEADER: &str =
    "algorithm,seed,round,tau,sigma,epsilon_spent,train_acc,test_acc,iterations,wall_ms,guarantee_ok";

/// One CSV record; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub algorithm: String,
    pub seed: u64,
    pub round: usize,
    pub tau: f64,
    pub sigma: f64,
    pub epsilon_spent: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    pub iterations: u64,
    pub wall_ms: u64,
    pub guarantee_ok: bool,
}

impl MetricsRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.algorithm.clone(),
            self.seed.to_string(),
            self.round.to_string(),
            self.tau.to_string(),
            self.sigma.to_string(),
            self.epsilon_spent.to_string(),
            self.train_acc.to_string(),
            self.test_acc.map(|v| v.to_string()).unwrap_or_default(),
            self.iterations.to_string(),
            self.wall_ms.to_string(),
            self.guarantee_ok.to_string(),
        ]
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn csv_bytes(rows: &[MetricsRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.into_inner().map_err(|e| crate::error::Error::Io(e.to_string()))
}

/// Sweep cells share one file; each record is prefixed by the swept
/// parameter and its value.
pub fn sweep_csv_bytes(sweep: &str, cells: &[(f64, &[MetricsRow])]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let header: Vec<&str> = ["sweep", "value"].into_iter().chain(CSV_HEADER.split(',')).collect();
    w.write_record(&header)?;
    for (value, rows) in cells {
        for row in rows.iter() {
            let mut rec = vec![sweep.to_string(), value.to_string()];
            rec.extend(row.record());
            w.write_record(&rec)?;
        }
    }
    w.into_inner().map_err(|e| crate::error::Error::Io(e.to_string()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// `stem.csv` and `stem.json`. A trailing `.csv` or `.json` on `stem` is
/// dropped first; any other dot is kept.
pub fn output_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let base = match stem.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => stem.with_extension(""),
        _ => stem.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = base.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with("csv"), with("json"))
}
