//! Participant submissions and their append-only JSON-lines log.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::DesignPoint;
use crate::metrics::{Metric, MetricVector};

#[derive(Debug, Error)]
pub enum SubmissionError {
    #[error("submission log `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("submission log line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("invalid submission: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub session_id: String,
    pub final_point: DesignPoint,
    pub final_metrics: MetricVector,
    /// Metrics the participant prioritised; may exceed three.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stated_priorities: Option<Vec<Metric>>,
    /// Acceptable additional cost, percent.
    pub willingness_to_pay: f64,
    #[serde(default)]
    pub feedback: String,
    /// RFC 3339.
    #[serde(default)]
    pub submitted_at: String,
}

impl SubmissionRecord {
    pub fn priorities(&self) -> &[Metric] {
        self.stated_priorities.as_deref().unwrap_or(&[])
    }

    pub fn prioritises(&self, m: Metric) -> bool {
        self.priorities().contains(&m)
    }

    /// Field-level checks; hull membership is the caller's job.
    pub fn validate(&self) -> Result<(), SubmissionError> {
        let bad = |m: &str| Err(SubmissionError::Invalid(m.into()));
        if self.session_id.trim().is_empty() {
            return bad("session id is empty");
        }
        if let Some(d) = self.final_point.invalid_dimension() {
            return Err(SubmissionError::Invalid(format!("final point has an invalid `{d}` coordinate")));
        }
        if let Some(p) = &self.stated_priorities {
            if p.is_empty() {
                return bad("stated priorities are empty");
            }
            let mut seen = p.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != p.len() {
                return bad("stated priorities repeat a metric");
            }
        }
        if !(self.willingness_to_pay.is_finite() && self.willingness_to_pay >= 0.0) {
            return bad("willingness to pay must be a nonnegative number");
        }
        if !self.final_metrics.to_array().iter().all(|v| v.is_finite()) {
            return bad("final metrics must be finite");
        }
        Ok(())
    }
}

/// Append-only writer. Each record is flushed and synced before `append` returns.
#[derive(Debug)]
pub struct SubmissionLog {
    path: PathBuf,
    file: File,
}

impl SubmissionLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, SubmissionError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| SubmissionError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &SubmissionRecord) -> Result<(), SubmissionError> {
        let mut line = serde_json::to_vec(record).map_err(|e| SubmissionError::Json { line: 0, source: e })?;
        line.push(b'\n');
        let io = |source| SubmissionError::Io {
            path: self.path.display().to_string(),
            source,
        };
        self.file.write_all(&line).map_err(io)?;
        self.file.sync_data().map_err(|source| SubmissionError::Io {
            path: self.path.display().to_string(),
            source,
        })
    }
}

/// Replay a log. A missing file reads as empty.
pub fn read_submissions(path: impl AsRef<Path>) -> Result<Vec<SubmissionRecord>, SubmissionError> {
    let path = path.as_ref();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(SubmissionError::Io {
                path: path.display().to_string(),
                source,
            })
        }
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| SubmissionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| SubmissionError::Json { line: i + 1, source })?);
    }
    Ok(out)
}
