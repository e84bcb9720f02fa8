use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::SimError;

/// One recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub k: usize,
    pub cycles: u64,
    pub e1: f64,
    pub e2: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `e₂` and the per-step change stayed below tolerance.
    Converged,
    /// `e₁` reached the configured threshold.
    Threshold,
    KMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSource {
    /// Resolved from `"auto"`.
    Auto,
    /// Given explicitly and checked against the bound.
    Checked,
    /// Given explicitly; no bound applied.
    Unchecked,
}

/// Sidecar contents. `config` alone is enough to replay the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: RunConfig,
    pub alpha: f64,
    pub alpha_source: AlphaSource,
    pub alpha_max: Option<f64>,
    pub cond_v: Option<f64>,
    pub diagonalizable: Option<bool>,
    /// How the law is advanced in time.
    pub discretization: String,
    pub cycles_per_iteration: u64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Reference solution used by `e1`.
    pub reference: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub bandwidth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
    pub meta: RunMetadata,
}

/// `metrics.csv` → `metrics.json`
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

impl MetricsLog {
    pub fn last(&self) -> &MetricsRow {
        self.rows.last().expect("a log always holds the initial row")
    }

    /// First recorded cycle count at which `e1 ≤ threshold`.
    pub fn cycles_to(&self, threshold: f64) -> Option<u64> {
        self.rows.iter().find(|r| r.e1 <= threshold).map(|r| r.cycles)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn sidecar_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.meta).expect("metadata serializes");
        s.push('\n');
        s
    }

    /// Writes the CSV and its JSON sidecar next to it.
    pub fn write(&self, csv_path: &Path) -> Result<(), SimError> {
        if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        }
        std::fs::write(csv_path, self.to_csv()).map_err(|e| SimError::io(csv_path, e))?;
        let side = sidecar_path(csv_path);
        std::fs::write(&side, self.sidecar_json()).map_err(|e| SimError::io(&side, e))
    }
}
