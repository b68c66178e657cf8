//! Persistent sample store: JSON-lines records plus a sidecar header.
//!
//! `<path>` holds one [`SampleRecord`] per line; `<path>.header.json` holds
//! the [`StoreHeader`]. Record 0 is always the cost optimum.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::design::{DesignPoint, Normalization, NUM_DIMS};
use crate::metrics::MetricVector;
use crate::model::SystemModel;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store io on `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("store line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("store header: {0}")]
    Header(serde_json::Error),
    #[error("invalid store: {0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub point: DesignPoint,
    /// Achieved slack, cost / c_opt - 1.
    pub epsilon: f64,
    /// Slack level the record was sampled at.
    pub level: f64,
    pub metrics: MetricVector,
    /// Direction seed (0 for the optimum).
    pub seed: u64,
    /// Objective direction over the design dimensions.
    pub direction: [f64; NUM_DIMS],
    /// Seconds spent solving for this record.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreHeader {
    /// Cost-optimal total system cost, NOK/yr.
    pub c_opt: f64,
    pub optimum_point: DesignPoint,
    pub normalization: Normalization,
    pub config_hash: String,
    /// Denominator of the technology-diversity share.
    pub technology_count: usize,
    pub levels: Vec<f64>,
    pub n_directions: usize,
    pub max_slack: f64,
    /// Solves that failed twice and were skipped.
    #[serde(default)]
    pub failed_solves: usize,
    /// Sampling stopped early at its time budget.
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleStore {
    pub header: StoreHeader,
    pub records: Vec<SampleRecord>,
}

/// Content hash of a model (configuration and profiles), hex sha256.
pub fn model_hash(model: &SystemModel) -> String {
    let mut h = Sha256::new();
    h.update(format!("{model:?}").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".header.json");
    PathBuf::from(s)
}

impl SampleStore {
    pub fn optimum(&self) -> &SampleRecord {
        &self.records[0]
    }

    pub fn points(&self) -> Vec<[f64; NUM_DIMS]> {
        self.records.iter().map(|r| r.point.to_array()).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Structural checks every loaded or freshly sampled store must pass.
    pub fn validate(&self) -> Result<(), StoreError> {
        let bad = |m: String| Err(StoreError::Invalid(m));
        if self.records.is_empty() {
            return bad("no records".into());
        }
        if self.records[0].point != self.header.optimum_point {
            return bad("record 0 is not the optimum point".into());
        }
        let max = self.header.max_slack;
        for (i, r) in self.records.iter().enumerate() {
            if r.point.invalid_dimension().is_some() {
                return bad(format!("record {i} has a negative or non-finite coordinate"));
            }
            if !(r.epsilon >= -1e-6 && r.epsilon <= max + 1e-6) {
                return bad(format!("record {i} slack {} outside [0, {max}]", r.epsilon));
            }
            if !r.metrics.is_valid() {
                return bad(format!("record {i} has invalid metrics"));
            }
            let p = r.point.to_array();
            let n = &self.header.normalization;
            if (0..NUM_DIMS).any(|k| p[k] < n.min[k] - 1e-9 || p[k] > n.max[k] + 1e-9) {
                return bad(format!("record {i} outside the normalization box"));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(|e| StoreError::Json { line: 0, source: e })?;
            w.write_all(b"\n").map_err(io_err(path))?;
        }
        w.flush().map_err(io_err(path))?;
        let hp = header_path(path);
        let text = serde_json::to_string_pretty(&self.header).map_err(StoreError::Header)?;
        std::fs::write(&hp, text).map_err(io_err(&hp))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let hp = header_path(path);
        let text = std::fs::read_to_string(&hp).map_err(io_err(&hp))?;
        let header: StoreHeader = serde_json::from_str(&text).map_err(StoreError::Header)?;
        let file = File::open(path).map_err(io_err(path))?;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(|e| StoreError::Json { line: i + 1, source: e })?);
        }
        let store = Self { header, records };
        store.validate()?;
        Ok(store)
    }
}
