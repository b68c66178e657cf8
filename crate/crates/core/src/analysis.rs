//! Post-study statistics over submission logs and slack-level hulls over a store.
//!
//! Quantiles use linear interpolation between order statistics (type 7).
//! Correlations are Pearson coefficients between a 0/1 priority indicator
//! and a slider coordinate, i.e. point-biserial correlations.

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::design::{DesignPoint, Dimension, Normalization, NUM_DIMS};
use crate::hull::{project_hull_2d, Polygon};
use crate::metrics::Metric;
use crate::store::SampleStore;
use crate::submission::SubmissionRecord;

pub const CORRELATION_METHOD: &str = "pearson (point-biserial on 0/1 priority indicators)";
pub const QUANTILE_METHOD: &str = "type 7 (linear interpolation between order statistics)";
pub const DEFAULT_CAPS: [f64; 7] = [0.0, 0.05, 0.10, 0.20, 0.40, 0.80, 1.25];

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no submissions")]
    Empty,
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("write `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Type-7 quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    quantile_sorted(&sorted(values), 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MadKind {
    /// |median - optimum| over the dimension's range.
    #[default]
    MedianToOptimum,
    /// Conventional median absolute deviation about the median, over the range.
    Conventional,
}

/// Per-dimension normalized deviation; `None` where the range is degenerate.
pub fn mad_per_dimension(
    subs: &[SubmissionRecord],
    optimum: &DesignPoint,
    normalization: &Normalization,
    kind: MadKind,
) -> Result<[Option<f64>; NUM_DIMS], AnalysisError> {
    if subs.is_empty() {
        return Err(AnalysisError::Empty);
    }
    Ok(std::array::from_fn(|k| {
        if normalization.is_degenerate(k) {
            return None;
        }
        let xs: Vec<f64> = subs.iter().map(|s| s.final_point.to_array()[k]).collect();
        let med = median(xs.iter().copied());
        let dev = match kind {
            MadKind::MedianToOptimum => (med - optimum.to_array()[k]).abs(),
            MadKind::Conventional => median(xs.iter().map(|x| (x - med).abs())),
        };
        Some(dev / normalization.range(k))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let v = sorted(values);
        if v.is_empty() {
            return None;
        }
        Some(Self {
            n: v.len(),
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorityComparison {
    pub metric: Metric,
    /// `None` flags an empty group.
    pub prioritisers: Option<Summary>,
    pub others: Option<Summary>,
}

pub fn priority_comparison(subs: &[SubmissionRecord], metric: Metric) -> PriorityComparison {
    let (yes, no): (Vec<&SubmissionRecord>, Vec<&SubmissionRecord>) = subs.iter().partition(|s| s.prioritises(metric));
    PriorityComparison {
        metric,
        prioritisers: Summary::of(yes.iter().map(|s| s.final_metrics.get(metric))),
        others: Summary::of(no.iter().map(|s| s.final_metrics.get(metric))),
    }
}

pub fn priority_comparison_by_name(subs: &[SubmissionRecord], metric: &str) -> Result<PriorityComparison, AnalysisError> {
    let m = metric.parse().map_err(|_| AnalysisError::UnknownMetric(metric.into()))?;
    Ok(priority_comparison(subs, m))
}

/// Two-pass Pearson correlation; `None` when either variable has no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub method: &'static str,
    /// Rows follow [`Metric::ALL`], columns [`Dimension::ALL`]; `None` is undefined.
    pub values: [[Option<f64>; NUM_DIMS]; 7],
}

pub fn correlation_matrix(subs: &[SubmissionRecord]) -> CorrelationMatrix {
    let mut values = [[None; NUM_DIMS]; 7];
    if subs.len() >= 3 {
        for m in Metric::ALL {
            let ind: Vec<f64> = subs.iter().map(|s| if s.prioritises(m) { 1.0 } else { 0.0 }).collect();
            for d in Dimension::ALL {
                let x: Vec<f64> = subs.iter().map(|s| s.final_point.get(d)).collect();
                values[m.index()][d.index()] = pearson(&ind, &x);
            }
        }
    }
    CorrelationMatrix {
        method: CORRELATION_METHOD,
        values,
    }
}

/// One hull per slack cap over the store's `(a, b)` metric pairs.
pub fn slack_hulls(store: &SampleStore, a: Metric, b: Metric, caps: &[f64]) -> Vec<(f64, Polygon)> {
    let values: Vec<(f64, f64, f64)> = store
        .records
        .iter()
        .map(|r| (r.metrics.get(a), r.metrics.get(b), r.epsilon))
        .collect();
    caps.iter().map(|&c| (c, project_hull_2d(&values, c))).collect()
}

/// `true` when every vertex of `inner` lies in `outer` (relative tolerance).
pub fn polygon_nested(inner: &Polygon, outer: &Polygon) -> bool {
    let scale = outer
        .vertices
        .iter()
        .chain(&inner.vertices)
        .map(|v| v.0.abs().max(v.1.abs()))
        .fold(1.0, f64::max);
    inner.vertices.iter().all(|&v| outer.contains(v, 1e-9 * scale))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> AnalysisError + '_ {
    move |source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<std::fs::File>, AnalysisError> {
    let p = dir.join(name);
    let f = std::fs::File::create(&p).map_err(io(&p))?;
    Ok(csv::Writer::from_writer(f))
}

pub fn write_mad_csv(dir: &Path, values: &[Option<f64>; NUM_DIMS], kind: MadKind) -> Result<(), AnalysisError> {
    let mut w = writer(dir, "mad.csv")?;
    w.write_record(["dimension", "value", "kind"])?;
    let k = match kind {
        MadKind::MedianToOptimum => "median-to-optimum",
        MadKind::Conventional => "conventional",
    };
    for d in Dimension::ALL {
        w.write_record([d.name(), &fmt_opt(values[d.index()]), k])?;
    }
    w.flush().map_err(io(dir))?;
    Ok(())
}

pub fn write_priorities_csv(dir: &Path, comps: &[PriorityComparison]) -> Result<(), AnalysisError> {
    let mut w = writer(dir, "priorities.csv")?;
    w.write_record(["metric", "group", "n", "min", "q1", "median", "q3", "max"])?;
    for c in comps {
        for (group, s) in [("prioritised", c.prioritisers), ("not-prioritised", c.others)] {
            let row: Vec<String> = match s {
                Some(s) => vec![
                    s.n.to_string(),
                    s.min.to_string(),
                    s.q1.to_string(),
                    s.median.to_string(),
                    s.q3.to_string(),
                    s.max.to_string(),
                ],
                None => vec!["0".into(), String::new(), String::new(), String::new(), String::new(), String::new()],
            };
            let mut rec = vec![c.metric.name().to_string(), group.to_string()];
            rec.extend(row);
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(io(dir))?;
    Ok(())
}

pub fn write_correlations_csv(dir: &Path, m: &CorrelationMatrix) -> Result<(), AnalysisError> {
    let mut w = writer(dir, "correlations.csv")?;
    w.write_record(["metric", "dimension", "correlation", "method"])?;
    for metric in Metric::ALL {
        for d in Dimension::ALL {
            w.write_record([metric.name(), d.name(), &fmt_opt(m.values[metric.index()][d.index()]), m.method])?;
        }
    }
    w.flush().map_err(io(dir))?;
    Ok(())
}

pub fn write_hulls_csv(dir: &Path, a: Metric, b: Metric, hulls: &[(f64, Polygon)]) -> Result<(), AnalysisError> {
    let mut w = writer(dir, "hulls.csv")?;
    w.write_record(["metric_a", "metric_b", "slack_cap", "vertex", "a", "b", "degenerate"])?;
    for (cap, poly) in hulls {
        for (i, v) in poly.vertices.iter().enumerate() {
            w.write_record([
                a.name().to_string(),
                b.name().to_string(),
                cap.to_string(),
                i.to_string(),
                v.0.to_string(),
                v.1.to_string(),
                poly.degenerate.to_string(),
            ])?;
        }
    }
    w.flush().map_err(io(dir))?;
    Ok(())
}

/// Tidy CSV bundle for external plotting.
pub fn export_plotdata(
    subs: &[SubmissionRecord],
    store: &SampleStore,
    hull_pair: (Metric, Metric),
    out: &Path,
) -> Result<(), AnalysisError> {
    std::fs::create_dir_all(out).map_err(io(out))?;
    let norm = &store.header.normalization;

    let mut w = writer(out, "strips.csv")?;
    w.write_record(["submission", "session_id", "dimension", "value", "normalized", "optimum"])?;
    for (i, s) in subs.iter().enumerate() {
        let q = norm.normalize(&s.final_point.to_array());
        for d in Dimension::ALL {
            w.write_record([
                i.to_string(),
                s.session_id.clone(),
                d.name().to_string(),
                s.final_point.get(d).to_string(),
                q[d.index()].to_string(),
                store.header.optimum_point.get(d).to_string(),
            ])?;
        }
    }
    w.flush().map_err(io(out))?;

    if subs.is_empty() {
        for (name, header) in [
            ("mad.csv", &["dimension", "value", "kind"][..]),
            ("priorities.csv", &["metric", "group", "n", "min", "q1", "median", "q3", "max"][..]),
            ("correlations.csv", &["metric", "dimension", "correlation", "method"][..]),
        ] {
            let mut w = writer(out, name)?;
            w.write_record(header)?;
            w.flush().map_err(io(out))?;
        }
    } else {
        let mad = mad_per_dimension(subs, &store.header.optimum_point, norm, MadKind::MedianToOptimum)?;
        write_mad_csv(out, &mad, MadKind::MedianToOptimum)?;
        let comps: Vec<_> = Metric::ALL.iter().map(|&m| priority_comparison(subs, m)).collect();
        write_priorities_csv(out, &comps)?;
        write_correlations_csv(out, &correlation_matrix(subs))?;
    }
    let hulls = slack_hulls(store, hull_pair.0, hull_pair.1, &DEFAULT_CAPS);
    write_hulls_csv(out, hull_pair.0, hull_pair.1, &hulls)?;
    Ok(())
}
