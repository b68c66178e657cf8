//! Dense two-phase tableau simplex.
//!
//! Meant for programs with a handful of rows and up to a few thousand
//! columns (hull membership, slider bounds, barycentric weights). Dantzig
//! pricing falls back to Bland's rule after a run of degenerate pivots.

use super::{LinearProgram, RowSense, SolutionWithDuals, SolveStatus};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;

/// One row of a standard-form program over nonnegative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRow {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl DenseRow {
    pub fn new(coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> Self {
        Self { coeffs, sense, rhs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOutcome {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Row duals, `d objective / d rhs`.
    pub y: Vec<f64>,
    /// Phase-one residual (sum of artificials) at termination.
    pub infeasibility: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    m: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [f64]) {
        let w = self.width;
        let p = self.data[r * w + c];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f != 0.0 {
                let row = &mut self.data[i * w..(i + 1) * w];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = cost[c];
        if f != 0.0 {
            for (v, pv) in cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row (last entry holds minus the objective) for `costs`.
    fn priced(&self, costs: &[f64]) -> Vec<f64> {
        let mut row = costs.to_vec();
        row.push(0.0);
        for i in 0..self.m {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                for (j, v) in row.iter_mut().enumerate() {
                    *v -= cb * self.at(i, j);
                }
            }
        }
        row
    }

    /// Run primal simplex iterations on `cost`; `false` signals unboundedness.
    fn optimize(&mut self, cost: &mut [f64], allow_artificial: bool) -> bool {
        let ncols = self.width - 1;
        let mut degenerate = 0usize;
        let max_iter = 50 * (self.m + ncols) + 1000;
        for _ in 0..max_iter {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..ncols {
                if !allow_artificial && self.kinds[j] == ColKind::Artificial {
                    continue;
                }
                if cost[j] < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = cost[j];
                }
            }
            let Some(c) = enter else {
                return true;
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if ratio < best_ratio - 1e-12 {
                                true
                            } else if ratio <= best_ratio + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    a > self.at(l, c)
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        best_ratio = ratio;
                    }
                }
            }
            let Some(r) = leave else {
                return false;
            };
            if best_ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c, cost);
        }
        log::warn!("dense simplex hit its iteration cap");
        true
    }
}

/// Minimise `c·x` subject to `rows`, `x ≥ 0`.
pub fn solve_standard(c: &[f64], rows: &[DenseRow], feasibility_tol: f64) -> DenseOutcome {
    let n = c.len();
    let m = rows.len();
    let mut flipped = vec![false; m];
    let mut senses = Vec::with_capacity(m);
    for (i, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.coeffs.len(), n);
        let mut sense = row.sense;
        if row.rhs < 0.0 {
            flipped[i] = true;
            sense = match sense {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
                RowSense::Eq => RowSense::Eq,
            };
        }
        senses.push(sense);
    }
    let n_slack = senses.iter().filter(|s| **s != RowSense::Eq).count();
    let n_art = senses.iter().filter(|s| **s != RowSense::Le).count();
    let ncols = n + n_slack + n_art;
    let width = ncols + 1;
    let mut data = vec![0.0; m * width];
    let mut kinds = vec![ColKind::Structural; n];
    kinds.extend(std::iter::repeat(ColKind::Slack).take(n_slack));
    kinds.extend(std::iter::repeat(ColKind::Artificial).take(n_art));
    let mut basis = vec![0usize; m];
    // Column whose initial entry is the unit vector of each row, with its sign.
    let mut unit_col = vec![(0usize, 1.0f64); m];
    let mut next_slack = n;
    let mut next_art = n + n_slack;
    for (i, row) in rows.iter().enumerate() {
        let s = if flipped[i] { -1.0 } else { 1.0 };
        let base = i * width;
        for (j, a) in row.coeffs.iter().enumerate() {
            data[base + j] = s * a;
        }
        data[base + width - 1] = s * row.rhs;
        match senses[i] {
            RowSense::Le => {
                data[base + next_slack] = 1.0;
                basis[i] = next_slack;
                unit_col[i] = (next_slack, 1.0);
                next_slack += 1;
            }
            RowSense::Ge => {
                data[base + next_slack] = -1.0;
                next_slack += 1;
                data[base + next_art] = 1.0;
                basis[i] = next_art;
                unit_col[i] = (next_art, 1.0);
                next_art += 1;
            }
            RowSense::Eq => {
                data[base + next_art] = 1.0;
                basis[i] = next_art;
                unit_col[i] = (next_art, 1.0);
                next_art += 1;
            }
        }
    }
    let mut t = Tableau {
        m,
        width,
        data,
        basis,
        kinds,
    };

    // Phase one.
    let phase1: Vec<f64> = t
        .kinds
        .iter()
        .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
        .collect();
    let mut cost = t.priced(&phase1);
    t.optimize(&mut cost, true);
    let infeasibility: f64 = (0..m)
        .filter(|&i| t.kinds[t.basis[i]] == ColKind::Artificial)
        .map(|i| t.rhs(i).max(0.0))
        .sum();
    if infeasibility > feasibility_tol {
        return DenseOutcome {
            status: SolveStatus::Infeasible,
            objective: f64::NAN,
            x: Vec::new(),
            y: Vec::new(),
            infeasibility,
        };
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if t.kinds[t.basis[i]] != ColKind::Artificial {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..ncols {
            if t.kinds[j] == ColKind::Artificial {
                continue;
            }
            let a = t.at(i, j).abs();
            if a > 1e-9 && best.map_or(true, |(_, b)| a > b) {
                best = Some((j, a));
            }
        }
        if let Some((j, _)) = best {
            let mut dummy = vec![0.0; width];
            t.pivot(i, j, &mut dummy);
        }
    }

    // Phase two.
    let mut phase2 = c.to_vec();
    phase2.resize(ncols, 0.0);
    let mut cost = t.priced(&phase2);
    if !t.optimize(&mut cost, false) {
        return DenseOutcome {
            status: SolveStatus::Unbounded,
            objective: f64::NAN,
            x: Vec::new(),
            y: Vec::new(),
            infeasibility,
        };
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        let b = t.basis[i];
        if b < n {
            x[b] = t.rhs(i).max(0.0);
        }
    }
    let y: Vec<f64> = (0..m)
        .map(|i| {
            let (col, sign) = unit_col[i];
            let dual = -cost[col] * sign;
            if flipped[i] {
                -dual
            } else {
                dual
            }
        })
        .collect();
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    DenseOutcome {
        status: SolveStatus::Optimal,
        objective,
        x,
        y,
        infeasibility,
    }
}

/// Adapter from a general bounded [`LinearProgram`] to [`solve_standard`].
pub(crate) fn solve_general(lp: &LinearProgram, feasibility_tol: f64) -> SolutionWithDuals {
    enum Map {
        Shift(f64),
        Mirror(f64),
        Split,
    }
    let mut maps = Vec::with_capacity(lp.num_vars());
    let mut ncols = 0usize;
    // (column of x' (and x- for split vars), map)
    let mut col_of = Vec::with_capacity(lp.num_vars());
    for v in &lp.vars {
        col_of.push(ncols);
        if v.lower.is_finite() {
            maps.push(Map::Shift(v.lower));
            ncols += 1;
        } else if v.upper.is_finite() {
            maps.push(Map::Mirror(v.upper));
            ncols += 1;
        } else {
            maps.push(Map::Split);
            ncols += 2;
        }
    }
    let mut c = vec![0.0; ncols];
    let mut offset = 0.0;
    for (j, v) in lp.vars.iter().enumerate() {
        let k = col_of[j];
        match maps[j] {
            Map::Shift(l) => {
                c[k] = v.cost;
                offset += v.cost * l;
            }
            Map::Mirror(u) => {
                c[k] = -v.cost;
                offset += v.cost * u;
            }
            Map::Split => {
                c[k] = v.cost;
                c[k + 1] = -v.cost;
            }
        }
    }
    let mut rows = Vec::with_capacity(lp.num_rows());
    for row in &lp.rows {
        let mut coeffs = vec![0.0; ncols];
        let mut rhs = row.rhs;
        for &(j, a) in &row.coeffs {
            let k = col_of[j];
            match maps[j] {
                Map::Shift(l) => {
                    coeffs[k] += a;
                    rhs -= a * l;
                }
                Map::Mirror(u) => {
                    coeffs[k] -= a;
                    rhs -= a * u;
                }
                Map::Split => {
                    coeffs[k] += a;
                    coeffs[k + 1] -= a;
                }
            }
        }
        rows.push(DenseRow::new(coeffs, row.sense, rhs));
    }
    for (j, v) in lp.vars.iter().enumerate() {
        if let Map::Shift(l) = maps[j] {
            if v.upper.is_finite() {
                let mut coeffs = vec![0.0; ncols];
                coeffs[col_of[j]] = 1.0;
                rows.push(DenseRow::new(coeffs, RowSense::Le, v.upper - l));
            }
        }
    }
    let out = solve_standard(&c, &rows, feasibility_tol);
    match out.status {
        SolveStatus::Optimal => {
            let primal: Vec<f64> = lp
                .vars
                .iter()
                .enumerate()
                .map(|(j, _)| {
                    let k = col_of[j];
                    match maps[j] {
                        Map::Shift(l) => l + out.x[k],
                        Map::Mirror(u) => u - out.x[k],
                        Map::Split => out.x[k] - out.x[k + 1],
                    }
                })
                .collect();
            SolutionWithDuals {
                status: SolveStatus::Optimal,
                objective: out.objective + offset,
                primal,
                duals: out.y[..lp.num_rows()].to_vec(),
                diagnostics: None,
            }
        }
        SolveStatus::Infeasible => SolutionWithDuals::failed(
            SolveStatus::Infeasible,
            format!("dense simplex: phase-one residual {:.3e}", out.infeasibility),
        ),
        status => SolutionWithDuals::failed(status, "dense simplex: unbounded ray"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max_problem() {
        // max 3x + 2y s.t. x + y <= 4, x + 3y <= 9, x <= 3
        let rows = vec![
            DenseRow::new(vec![1.0, 1.0], RowSense::Le, 4.0),
            DenseRow::new(vec![1.0, 3.0], RowSense::Le, 9.0),
            DenseRow::new(vec![1.0, 0.0], RowSense::Le, 3.0),
        ];
        let out = solve_standard(&[-3.0, -2.0], &rows, 1e-9);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective + 11.0).abs() < 1e-12);
        assert!((out.x[0] - 3.0).abs() < 1e-12 && (out.x[1] - 1.0).abs() < 1e-12);
        // Duals of a min problem with <= rows are nonpositive.
        assert!((out.y[0] + 2.0).abs() < 1e-12);
        assert!(out.y[1].abs() < 1e-12);
        assert!((out.y[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn equality_with_negative_rhs() {
        // min x + y s.t. -x - y = -2 -> objective 2, dual of original row -1
        let rows = vec![DenseRow::new(vec![-1.0, -1.0], RowSense::Eq, -2.0)];
        let out = solve_standard(&[1.0, 1.0], &rows, 1e-9);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - 2.0).abs() < 1e-12);
        assert!((out.y[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let rows = vec![
            DenseRow::new(vec![1.0], RowSense::Ge, 2.0),
            DenseRow::new(vec![1.0], RowSense::Le, 1.0),
        ];
        assert_eq!(solve_standard(&[1.0], &rows, 1e-9).status, SolveStatus::Infeasible);
        let rows = vec![DenseRow::new(vec![1.0, -1.0], RowSense::Le, 1.0)];
        assert_eq!(solve_standard(&[0.0, -1.0], &rows, 1e-9).status, SolveStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let rows = vec![
            DenseRow::new(vec![1.0, 1.0], RowSense::Eq, 1.0),
            DenseRow::new(vec![2.0, 2.0], RowSense::Eq, 2.0),
        ];
        let out = solve_standard(&[1.0, 2.0], &rows, 1e-9);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - 1.0).abs() < 1e-12);
    }
}
