//! Store-backed queries behind the HTTP endpoints. Everything here is pure
//! over an immutable [`Space`].

use nearopt_core::hull::{GeometryError, PointCloud, COINCIDENT_TOL};
use nearopt_core::metrics::{Metric, MetricVector};
use nearopt_core::store::SampleStore;
use nearopt_core::{DesignPoint, Dimension, NUM_DIMS};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ExplorerError;

pub struct Space {
    pub store: SampleStore,
    pub cloud: PointCloud,
    /// Per-metric value of every record, in store order.
    fields: Vec<Vec<f64>>,
    /// Records a session may start from.
    starts: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DimensionInfo {
    pub name: String,
    pub unit: String,
    pub min: f64,
    pub max: f64,
    pub optimum: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpaceSummary {
    pub dims: Vec<DimensionInfo>,
    pub metrics: Vec<String>,
    pub c_opt: f64,
    pub optimum_point: DesignPoint,
    pub normalization: nearopt_core::Normalization,
    pub max_slack: f64,
    pub records: usize,
    pub config_hash: String,
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DimBounds {
    pub dim: String,
    pub a: f64,
    pub b: f64,
    pub current: f64,
    /// Parts of the full slider range outside [a, b].
    pub infeasible: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundsResponse {
    pub point: DesignPoint,
    pub bounds: Vec<DimBounds>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsResponse {
    pub point: DesignPoint,
    pub metrics: MetricVector,
    /// Weights came from the whole cloud rather than a local simplex.
    pub approximate: bool,
    pub vertices: Vec<usize>,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MinimizeResponse {
    pub metric: Metric,
    pub index: usize,
    pub point: DesignPoint,
    pub metrics: MetricVector,
}

fn stale(e: GeometryError) -> ExplorerError {
    match e {
        GeometryError::Stale { distance, nearest } => ExplorerError::Stale {
            distance,
            nearest: DesignPoint::from_array(nearest),
        },
        other => ExplorerError::Internal(other.to_string()),
    }
}

impl Space {
    pub fn new(store: SampleStore) -> Result<Self, ExplorerError> {
        let cloud = PointCloud::with_normalization(store.points(), store.header.normalization)
            .map_err(|e| ExplorerError::Internal(e.to_string()))?;
        let fields = Metric::ALL
            .iter()
            .map(|&m| store.records.iter().map(|r| r.metrics.get(m)).collect())
            .collect();
        let n = store.header.normalization;
        let opt = n.normalize(&store.header.optimum_point.to_array());
        let starts: Vec<usize> = (0..store.len())
            .filter(|&i| {
                let q = n.normalize(&store.records[i].point.to_array());
                (0..NUM_DIMS).map(|k| (q[k] - opt[k]).powi(2)).sum::<f64>().sqrt() >= COINCIDENT_TOL
            })
            .collect();
        let starts = if starts.is_empty() { vec![0] } else { starts };
        Ok(Self {
            store,
            cloud,
            fields,
            starts,
        })
    }

    pub fn summary(&self) -> SpaceSummary {
        let h = &self.store.header;
        let n = &h.normalization;
        SpaceSummary {
            dims: Dimension::ALL
                .iter()
                .map(|&d| DimensionInfo {
                    name: d.name().into(),
                    unit: d.unit().into(),
                    min: n.min[d.index()],
                    max: n.max[d.index()],
                    optimum: h.optimum_point.get(d),
                    degenerate: n.is_degenerate(d.index()),
                })
                .collect(),
            metrics: Metric::ALL.iter().map(|m| m.name().to_string()).collect(),
            c_opt: h.c_opt,
            optimum_point: h.optimum_point,
            normalization: *n,
            max_slack: h.max_slack,
            records: self.store.len(),
            config_hash: h.config_hash.clone(),
            truncated: h.truncated,
        }
    }

    /// A uniformly chosen stored point other than the optimum (unless nothing else exists).
    pub fn random_start<R: Rng>(&self, rng: &mut R) -> (usize, DesignPoint) {
        let i = self.starts[rng.gen_range(0..self.starts.len())];
        (i, self.store.records[i].point)
    }

    pub fn contains(&self, p: &DesignPoint) -> bool {
        self.cloud.contains(&p.to_array())
    }

    pub fn bounds(&self, p: &DesignPoint) -> Result<BoundsResponse, ExplorerError> {
        let x = p.to_array();
        let all = self.cloud.all_bounds(&x).map_err(stale)?;
        let n = self.cloud.normalization();
        let bounds = Dimension::ALL
            .iter()
            .map(|&d| {
                let k = d.index();
                let (a, b) = all[k];
                let mut infeasible = Vec::new();
                if a > n.min[k] {
                    infeasible.push((n.min[k], a));
                }
                if b < n.max[k] {
                    infeasible.push((b, n.max[k]));
                }
                DimBounds {
                    dim: d.name().into(),
                    a,
                    b,
                    current: x[k],
                    infeasible,
                }
            })
            .collect();
        Ok(BoundsResponse { point: *p, bounds })
    }

    pub fn metrics(&self, p: &DesignPoint) -> Result<MetricsResponse, ExplorerError> {
        let w = self.cloud.interpolation_weights(&p.to_array()).map_err(stale)?;
        let values: [f64; 7] = std::array::from_fn(|m| w.apply(&self.fields[m]));
        Ok(MetricsResponse {
            point: *p,
            metrics: MetricVector::from_array(values),
            approximate: w.approximate,
            vertices: w.vertices,
            coefficients: w.coefficients,
        })
    }

    /// Record minimising `metric`; ties go to the lower slack, then the lower index.
    pub fn minimize(&self, metric: Metric) -> MinimizeResponse {
        let recs = &self.store.records;
        let best = (0..recs.len())
            .min_by(|&i, &j| {
                let (a, b) = (&recs[i].metrics, &recs[j].metrics);
                a.get(metric)
                    .total_cmp(&b.get(metric))
                    .then(a.slack.total_cmp(&b.slack))
                    .then(i.cmp(&j))
            })
            .expect("store has the optimum record");
        MinimizeResponse {
            metric,
            index: best,
            point: recs[best].point,
            metrics: recs[best].metrics,
        }
    }
}
