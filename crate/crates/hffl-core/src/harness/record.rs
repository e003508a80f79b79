//! Persisted run records.
//!
//! A run directory is self-contained: the resolved config, per-trial
//! artifacts, summary CSVs, and `record.json` holding the raw per-trial
//! numbers every summary is computed from, plus checksums of the emitted
//! files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::config::{ExperimentConfig, ExperimentKind};

/// One per-trial score observation: `(trial, level, arch) -> score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub trial: usize,
    pub level: usize,
    pub arch: String,
    pub score: f64,
}

/// One per-trial valuation observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyRow {
    pub trial: usize,
    pub learner: String,
    pub agent: usize,
    pub phi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loo: Option<f64>,
}

/// Median/spread of per-agent accuracy for one phase of a baseline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub trial: usize,
    /// `local` (round 0) or `federated` (final round).
    pub phase: String,
    pub median_accuracy: f64,
    pub std_accuracy: f64,
}

/// One bound-table entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub samples: usize,
    pub epsilon: f64,
    pub family_size: usize,
    pub delta: f64,
    /// Observed violation rate when the empirical check ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation_rate: Option<f64>,
}

/// A cross-trial aggregate, recomputable from the raw rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    /// Grouping key, e.g. `level=2,arch=logistic`.
    pub key: String,
    pub median: f64,
    pub std: f64,
    pub count: usize,
}

/// Everything a run leaves behind, minus the bulky per-round streams
/// (those live in `rounds.jsonl` files next to this record).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub score_rows: Vec<ScoreRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shapley_rows: Vec<ShapleyRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phase_rows: Vec<PhaseRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bound_rows: Vec<BoundRow>,
    pub aggregates: Vec<AggregateRow>,
    /// sha256 of every emitted file, keyed by path relative to the run
    /// directory. `record.json` itself is excluded.
    pub checksums: BTreeMap<String, String>,
}

pub const RECORD_FILE: &str = "record.json";

impl RunRecord {
    pub fn save(&self, run_dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Record(e.to_string()))?;
        std::fs::write(run_dir.join(RECORD_FILE), text)?;
        Ok(())
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(RECORD_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Error::Record(format!("cannot read {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Record(format!("cannot parse {}: {e}", path.display())))
    }
}

/// Hex sha256 of a file.
pub fn file_checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}

/// Checksums for a set of files under `run_dir`, keyed by relative path.
pub fn checksum_files(run_dir: &Path, files: &[String]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for rel in files {
        out.insert(rel.clone(), file_checksum(&run_dir.join(rel))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::from_toml(
            r#"
kind = "bounds"

[dataset]
profile = "blobs"
classes = 2
per_class = 10

[bounds]
samples = [100]
epsilons = [0.1]
"#,
        )
        .unwrap();
        cfg.resolve();
        cfg
    }

    #[test]
    fn record_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let record = RunRecord {
            kind: ExperimentKind::Bounds,
            config: tiny_config(),
            score_rows: vec![],
            shapley_rows: vec![],
            phase_rows: vec![],
            bound_rows: vec![BoundRow {
                samples: 100,
                epsilon: 0.1,
                family_size: 10,
                delta: 0.5,
                violation_rate: None,
            }],
            aggregates: vec![],
            checksums: BTreeMap::new(),
        };
        record.save(dir.path()).unwrap();
        let back = RunRecord::load(dir.path()).unwrap();
        assert_eq!(back.kind, record.kind);
        assert_eq!(back.bound_rows, record.bound_rows);
    }

    #[test]
    fn checksums_are_stable_and_content_sensitive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "level,score\n1,0.5\n").unwrap();
        let a = file_checksum(&path).unwrap();
        let b = file_checksum(&path).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        std::fs::write(&path, "level,score\n1,0.6\n").unwrap();
        assert_ne!(file_checksum(&path).unwrap(), a);
    }
}
