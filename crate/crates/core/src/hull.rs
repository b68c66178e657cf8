//! Geometric queries over the sampled design points.
//!
//! All distances and tolerances are in min-max normalized coordinates. Every
//! query is a small LP over convex weights `λ ≥ 0, Σλ = 1`, solved with the
//! dense simplex.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{Normalization, NUM_DIMS};
use crate::solver::{solve_standard, DenseRow, RowSense, SolveStatus};

/// Membership tolerance on the L1 distance to the hull.
pub const CONTAINS_TOL: f64 = 1e-7;
/// Normalized distance below which a query is a stored point.
pub const COINCIDENT_TOL: f64 = 1e-9;
pub const DEFAULT_NEIGHBOURS: usize = 51;
pub const DEFAULT_HULL_CANDIDATES: usize = 200;
const SUPPORT_DIRECTIONS: usize = 2000;
const LP_TOL: f64 = 1e-10;

type Point = [f64; NUM_DIMS];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point cloud needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("stale point: {distance:.3e} outside the feasible hull")]
    Stale { distance: f64, nearest: Point },
    #[error("dimension index {0} out of range")]
    BadDimension(usize),
    #[error("field has {got} values for {expected} points")]
    FieldLength { expected: usize, got: usize },
    #[error("geometry LP failed: {0:?}")]
    Lp(SolveStatus),
}

/// Design points with their normalization and precomputed extreme points.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<Point>,
    unit: Vec<Point>,
    normalization: Normalization,
    hull_vertices: Vec<usize>,
    pub neighbours: usize,
    pub hull_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexInterpolation {
    pub vertices: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// The local candidate set did not cover the query; weights come from the full cloud.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    /// Counter-clockwise, no repeated closing vertex.
    pub vertices: Vec<(f64, f64)>,
    /// Fewer than three qualifying records, or all collinear.
    pub degenerate: bool,
}

fn sq_dist(a: &Point, b: &Point) -> f64 {
    (0..NUM_DIMS).map(|k| (a[k] - b[k]).powi(2)).sum()
}

impl PointCloud {
    pub const MIN_POINTS: usize = 6;

    /// Cloud normalized to the bounding box of `points`.
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        let norm = Normalization::enclosing(points.iter()).ok_or(GeometryError::TooFewPoints {
            needed: Self::MIN_POINTS,
            got: 0,
        })?;
        Self::with_normalization(points, norm)
    }

    pub fn with_normalization(points: Vec<Point>, normalization: Normalization) -> Result<Self, GeometryError> {
        if points.len() < Self::MIN_POINTS {
            return Err(GeometryError::TooFewPoints {
                needed: Self::MIN_POINTS,
                got: points.len(),
            });
        }
        let unit: Vec<Point> = points.iter().map(|p| normalization.normalize(p)).collect();
        let hull_vertices = support_vertices(&unit);
        Ok(Self {
            points,
            unit,
            normalization,
            hull_vertices,
            neighbours: DEFAULT_NEIGHBOURS,
            hull_candidates: DEFAULT_HULL_CANDIDATES,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn hull_vertices(&self) -> &[usize] {
        &self.hull_vertices
    }

    /// L1 distance from `x` to the hull and the closest hull point (raw coordinates).
    pub fn distance(&self, x: &Point) -> Result<(f64, Point), GeometryError> {
        let q = self.normalization.normalize(x);
        let all: Vec<usize> = (0..self.len()).collect();
        let (dist, lambda) = l1_projection(&self.unit, &all, &q)?;
        let mut nearest = [0.0; NUM_DIMS];
        for (&i, &l) in all.iter().zip(&lambda) {
            for k in 0..NUM_DIMS {
                nearest[k] += l * self.points[i][k];
            }
        }
        Ok((dist, nearest))
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.iter().all(|v| v.is_finite()) && matches!(self.distance(x), Ok((d, _)) if d <= CONTAINS_TOL)
    }

    /// Closest point of the hull to `x` (itself when inside).
    pub fn nearest_feasible(&self, x: &Point) -> Result<Point, GeometryError> {
        let (d, nearest) = self.distance(x)?;
        Ok(if d <= CONTAINS_TOL { *x } else { nearest })
    }

    fn check_inside(&self, x: &Point) -> Result<f64, GeometryError> {
        let (d, nearest) = self.distance(x)?;
        if d > CONTAINS_TOL {
            return Err(GeometryError::Stale { distance: d, nearest });
        }
        Ok(d)
    }

    /// Range of coordinate `dim` over the hull with the other four fixed at `x`.
    pub fn slider_bounds(&self, x: &Point, dim: usize) -> Result<(f64, f64), GeometryError> {
        if dim >= NUM_DIMS {
            return Err(GeometryError::BadDimension(dim));
        }
        let budget = self.check_inside(x)?;
        self.bounds_with_budget(x, dim, budget)
    }

    /// Bounds for every dimension, sharing one membership check.
    pub fn all_bounds(&self, x: &Point) -> Result<[(f64, f64); NUM_DIMS], GeometryError> {
        let budget = self.check_inside(x)?;
        let mut out = [(0.0, 0.0); NUM_DIMS];
        for (dim, slot) in out.iter_mut().enumerate() {
            *slot = self.bounds_with_budget(x, dim, budget)?;
        }
        Ok(out)
    }

    fn bounds_with_budget(&self, x: &Point, dim: usize, budget: f64) -> Result<(f64, f64), GeometryError> {
        let q = self.normalization.normalize(x);
        let n = self.len();
        let others: Vec<usize> = (0..NUM_DIMS).filter(|&k| k != dim).collect();
        // Columns: λ (n), then s⁺/s⁻ per fixed coordinate when the point sits
        // within tolerance of (not exactly on) the hull.
        let elastic = budget > 0.0;
        let ns = if elastic { 2 * others.len() } else { 0 };
        let width = n + ns;
        let mut rows = Vec::with_capacity(others.len() + 2);
        for (r, &k) in others.iter().enumerate() {
            let mut coeffs: Vec<f64> = self.unit.iter().map(|v| v[k]).collect();
            coeffs.resize(width, 0.0);
            if elastic {
                coeffs[n + 2 * r] = 1.0;
                coeffs[n + 2 * r + 1] = -1.0;
            }
            rows.push(DenseRow::new(coeffs, RowSense::Eq, q[k]));
        }
        let mut ones = vec![1.0; n];
        ones.resize(width, 0.0);
        rows.push(DenseRow::new(ones, RowSense::Eq, 1.0));
        if elastic {
            let mut s = vec![0.0; n];
            s.resize(width, 1.0);
            rows.push(DenseRow::new(s, RowSense::Le, budget + 1e-12));
        }
        let mut cost: Vec<f64> = self.unit.iter().map(|v| v[dim]).collect();
        cost.resize(width, 0.0);
        let lo = solve_standard(&cost, &rows, LP_TOL);
        let neg: Vec<f64> = cost.iter().map(|c| -c).collect();
        let hi = solve_standard(&neg, &rows, LP_TOL);
        for o in [&lo, &hi] {
            if o.status != SolveStatus::Optimal {
                return Err(GeometryError::Lp(o.status));
            }
        }
        let a = self.snap(dim, self.denorm_coord(dim, lo.objective), x[dim]);
        let b = self.snap(dim, self.denorm_coord(dim, -hi.objective), x[dim]);
        Ok((a.min(x[dim]), b.max(x[dim])))
    }

    fn denorm_coord(&self, dim: usize, q: f64) -> f64 {
        let mut p = [0.0; NUM_DIMS];
        p[dim] = q;
        self.normalization.denormalize(&p)[dim]
    }

    /// Round-off on a bound attained at a stored coordinate, or at the query
    /// coordinate itself, is snapped onto it.
    fn snap(&self, dim: usize, v: f64, current: f64) -> f64 {
        let n = &self.normalization;
        let scale = if n.is_degenerate(dim) { 1.0 } else { n.range(dim) };
        let tol = 1e-12 * scale.max(1.0);
        self.points
            .iter()
            .map(|p| p[dim])
            .chain(std::iter::once(current))
            .filter(|c| (c - v).abs() <= tol)
            .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
            .unwrap_or(v)
    }

    /// The `k` stored points closest to `x`, ties broken by index.
    pub fn nearest_neighbors(&self, x: &Point, k: usize) -> Vec<usize> {
        let q = self.normalization.normalize(x);
        let mut order: Vec<(f64, usize)> = self.unit.iter().enumerate().map(|(i, v)| (sq_dist(v, &q), i)).collect();
        let k = k.min(order.len());
        if k < order.len() {
            order.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.truncate(k);
        }
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().map(|(_, i)| i).collect()
    }

    /// Barycentric weights for `x` over a local simplex.
    ///
    /// A query coinciding with a stored point gets that point alone with
    /// weight 1. Otherwise the candidates are the nearest neighbours plus the
    /// nearest hull vertices, and the weights minimise `Σλᵢ‖vᵢ - x‖²`
    /// subject to `Σλᵢvᵢ = x`: the lifting construction of the Delaunay
    /// triangulation, whose basic optimum is the Delaunay simplex of the
    /// candidate set containing `x` (at most six nonzero weights).
    pub fn interpolation_weights(&self, x: &Point) -> Result<SimplexInterpolation, GeometryError> {
        let q = self.normalization.normalize(x);
        let nearest = self.nearest_neighbors(x, 1)[0];
        if sq_dist(&self.unit[nearest], &q).sqrt() < COINCIDENT_TOL {
            return Ok(SimplexInterpolation {
                vertices: vec![nearest],
                coefficients: vec![1.0],
                approximate: false,
            });
        }
        let d = self.check_inside(x)?;
        // A point within tolerance of the surface is interpolated at its projection.
        let target = if d > 0.0 {
            let (_, p) = self.distance(x)?;
            self.normalization.normalize(&p)
        } else {
            q
        };

        let mut candidates: BTreeSet<usize> = self.nearest_neighbors(x, self.neighbours).into_iter().collect();
        let mut hull: Vec<(f64, usize)> = self.hull_vertices.iter().map(|&i| (sq_dist(&self.unit[i], &q), i)).collect();
        hull.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.extend(hull.iter().take(self.hull_candidates).map(|&(_, i)| i));
        let local: Vec<usize> = candidates.into_iter().collect();
        if let Some(w) = lifted_weights(&self.unit, &local, &target)? {
            return Ok(w.with_approximate(false));
        }
        let all: Vec<usize> = (0..self.len()).collect();
        match lifted_weights(&self.unit, &all, &target)? {
            Some(w) => Ok(w.with_approximate(true)),
            None => Err(GeometryError::Lp(SolveStatus::Infeasible)),
        }
    }

    /// Interpolate a per-point field at `x`.
    pub fn interpolate(&self, field: &[f64], x: &Point) -> Result<f64, GeometryError> {
        if field.len() != self.len() {
            return Err(GeometryError::FieldLength {
                expected: self.len(),
                got: field.len(),
            });
        }
        let w = self.interpolation_weights(x)?;
        Ok(w.apply(field))
    }
}

impl SimplexInterpolation {
    fn with_approximate(mut self, a: bool) -> Self {
        self.approximate = a;
        self
    }

    /// `Σcᵢ f(vᵢ)`, clamped to the range of the used vertex values.
    pub fn apply(&self, field: &[f64]) -> f64 {
        if let [i] = self.vertices[..] {
            return field[i];
        }
        let vals: Vec<f64> = self.vertices.iter().map(|&i| field[i]).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v: f64 = vals.iter().zip(&self.coefficients).map(|(f, c)| f * c).sum();
        v.clamp(lo, hi)
    }
}

/// min Σ(s⁺+s⁻) s.t. Σλv + s⁺ - s⁻ = q, Σλ = 1 over the `subset` columns.
fn l1_projection(unit: &[Point], subset: &[usize], q: &Point) -> Result<(f64, Vec<f64>), GeometryError> {
    let n = subset.len();
    let width = n + 2 * NUM_DIMS;
    let mut rows = Vec::with_capacity(NUM_DIMS + 1);
    for k in 0..NUM_DIMS {
        let mut c: Vec<f64> = subset.iter().map(|&i| unit[i][k]).collect();
        c.resize(width, 0.0);
        c[n + 2 * k] = 1.0;
        c[n + 2 * k + 1] = -1.0;
        rows.push(DenseRow::new(c, RowSense::Eq, q[k]));
    }
    let mut ones = vec![1.0; n];
    ones.resize(width, 0.0);
    rows.push(DenseRow::new(ones, RowSense::Eq, 1.0));
    let mut cost = vec![0.0; n];
    cost.resize(width, 1.0);
    let out = solve_standard(&cost, &rows, LP_TOL);
    if out.status != SolveStatus::Optimal {
        return Err(GeometryError::Lp(out.status));
    }
    Ok((out.objective.max(0.0), out.x[..n].to_vec()))
}

/// Lifted-Delaunay weights; `None` when `q` is outside the subset's hull.
fn lifted_weights(unit: &[Point], subset: &[usize], q: &Point) -> Result<Option<SimplexInterpolation>, GeometryError> {
    let mut rows = Vec::with_capacity(NUM_DIMS + 1);
    for k in 0..NUM_DIMS {
        rows.push(DenseRow::new(subset.iter().map(|&i| unit[i][k]).collect(), RowSense::Eq, q[k]));
    }
    rows.push(DenseRow::new(vec![1.0; subset.len()], RowSense::Eq, 1.0));
    let cost: Vec<f64> = subset.iter().map(|&i| sq_dist(&unit[i], q)).collect();
    let out = solve_standard(&cost, &rows, LP_TOL);
    match out.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(None),
        s => return Err(GeometryError::Lp(s)),
    }
    let mut vertices = Vec::new();
    let mut coefficients = Vec::new();
    for (&i, &l) in subset.iter().zip(&out.x) {
        if l > 1e-13 {
            vertices.push(i);
            coefficients.push(l);
        }
    }
    let total: f64 = coefficients.iter().sum();
    coefficients.iter_mut().for_each(|c| *c /= total);
    Ok(Some(SimplexInterpolation {
        vertices,
        coefficients,
        approximate: false,
    }))
}

/// Extreme points found by maximising random linear functionals (plus ±axes).
fn support_vertices(unit: &[Point]) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut dirs: Vec<Point> = Vec::with_capacity(SUPPORT_DIRECTIONS + 2 * NUM_DIMS);
    for k in 0..NUM_DIMS {
        let mut e = [0.0; NUM_DIMS];
        e[k] = 1.0;
        dirs.push(e);
        e[k] = -1.0;
        dirs.push(e);
    }
    for _ in 0..SUPPORT_DIRECTIONS {
        dirs.push(std::array::from_fn(|_| StandardNormal.sample(&mut rng)));
    }
    let mut found = BTreeSet::new();
    for d in &dirs {
        let score = |p: &Point| (0..NUM_DIMS).map(|k| d[k] * p[k]).sum::<f64>();
        let best = (0..unit.len())
            .max_by(|&a, &b| score(&unit[a]).total_cmp(&score(&unit[b])).then(b.cmp(&a)))
            .expect("nonempty cloud");
        found.insert(best);
    }
    found.into_iter().collect()
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull of planar points (Andrew's monotone chain), counter-clockwise.
pub fn convex_hull_2d(points: &[(f64, f64)]) -> Polygon {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return Polygon {
            vertices: pts,
            degenerate: true,
        };
    }
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let degenerate = lower.len() < 3;
    Polygon {
        vertices: lower,
        degenerate,
    }
}

/// Hull of `(a, b)` over the records whose slack is at most `cap`.
pub fn project_hull_2d(values: &[(f64, f64, f64)], cap: f64) -> Polygon {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .filter(|(_, _, slack)| *slack <= cap + 1e-6)
        .map(|&(a, b, _)| (a, b))
        .collect();
    let mut poly = convex_hull_2d(&pts);
    if pts.len() < 3 {
        poly.degenerate = true;
    }
    poly
}

impl Polygon {
    /// Point inside or on the boundary, with a relative tolerance.
    pub fn contains(&self, p: (f64, f64), tol: f64) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => {
                let v = self.vertices[0];
                (v.0 - p.0).abs() <= tol && (v.1 - p.1).abs() <= tol
            }
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt().max(1e-300);
                let t = ((p.0 - a.0) * (b.0 - a.0) + (p.1 - a.1) * (b.1 - a.1)) / (len * len);
                cross(a, b, p).abs() / len <= tol && (-tol..=1.0 + tol).contains(&t)
            }
            n => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
                cross(a, b, p) >= -tol * len
            }),
        }
    }
}
