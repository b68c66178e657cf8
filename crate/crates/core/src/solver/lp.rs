use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::SolverError;

/// Sense of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Constraint {
    /// Lower and upper activity bounds implied by the sense.
    pub fn bounds(&self) -> (f64, f64) {
        match self.sense {
            RowSense::Le => (f64::NEG_INFINITY, self.rhs),
            RowSense::Eq => (self.rhs, self.rhs),
            RowSense::Ge => (self.rhs, f64::INFINITY),
        }
    }
}

/// A minimisation LP with named, bounded variables and named sparse rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub vars: Vec<Variable>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        self.vars.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        let coeffs = coalesce(coeffs);
        self.rows.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn find_row(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.name == name)
    }

    pub fn find_var(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Map from row name to index, for callers doing many lookups.
    pub fn row_index(&self) -> HashMap<&str, usize> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.as_str(), i))
            .collect()
    }

    pub fn objective_coefficients(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.cost).collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest absolute bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let act = self.row_activity(i, x);
            let (lo, hi) = row.bounds();
            worst = worst.max(lo - act).max(act - hi);
        }
        worst
    }

    /// Check structural well-formedness.
    pub fn validate(&self) -> Result<(), SolverError> {
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper || !v.cost.is_finite() {
                return Err(SolverError::Malformed(format!("variable `{}` has invalid data", v.name)));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(SolverError::Malformed(format!("row `{}` has non-finite rhs", row.name)));
            }
            for &(j, a) in &row.coeffs {
                if j >= self.vars.len() {
                    return Err(SolverError::Malformed(format!(
                        "row `{}` references undeclared variable {j}",
                        row.name
                    )));
                }
                if !a.is_finite() {
                    return Err(SolverError::Malformed(format!(
                        "row `{}` has a non-finite coefficient",
                        row.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Column-major copy of the constraint matrix: (starts, indices, values).
    pub(crate) fn to_csc(&self) -> (Vec<i32>, Vec<i32>, Vec<f64>) {
        let n = self.vars.len();
        let mut counts = vec![0usize; n];
        for row in &self.rows {
            for &(j, _) in &row.coeffs {
                counts[j] += 1;
            }
        }
        let mut starts = Vec::with_capacity(n + 1);
        let mut acc = 0usize;
        for c in &counts {
            starts.push(acc);
            acc += c;
        }
        starts.push(acc);
        let mut fill = starts.clone();
        let mut index = vec![0i32; acc];
        let mut value = vec![0f64; acc];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                index[fill[j]] = i as i32;
                value[fill[j]] = a;
                fill[j] += 1;
            }
        }
        (starts[..n].iter().map(|&s| s as i32).collect(), index, value)
    }
}

/// Merge repeated column indices in a sparse row and drop exact zeros.
fn coalesce(mut coeffs: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    if coeffs.windows(2).all(|w| w[0].0 < w[1].0) {
        coeffs.retain(|&(_, a)| a != 0.0);
        return coeffs;
    }
    coeffs.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
    for (j, a) in coeffs {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}
