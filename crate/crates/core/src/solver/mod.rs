//! Uniform contract for solving linear programs and extracting primal values
//! and constraint duals.
//!
//! Two backends sit behind [`solve_with`]: HiGHS (through its C API) for the
//! energy-system LPs, and a dense two-phase simplex for the small geometric
//! programs of the exploration layer. Both report duals with the sign
//! convention `dual = d objective / d rhs`.

mod dense;
mod export;
mod highs;
mod lp;

pub use dense::{solve_standard, DenseOutcome, DenseRow};
pub use export::write_lp_format;
pub use highs::HighsSession;
pub use lp::{Constraint, LinearProgram, RowSense, Variable};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("HiGHS call `{call}` failed with status {status}")]
    Backend { call: &'static str, status: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Result of a solve. `primal` and `duals` are empty unless the status is optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionWithDuals {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    /// Backend diagnostics for anything other than a clean optimum.
    pub diagnostics: Option<String>,
}

impl SolutionWithDuals {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn dual_of(&self, lp: &LinearProgram, row_name: &str) -> Option<f64> {
        lp.find_row(row_name).and_then(|i| self.duals.get(i).copied())
    }

    pub fn value_of(&self, lp: &LinearProgram, var_name: &str) -> Option<f64> {
        lp.find_var(var_name).and_then(|j| self.primal.get(j).copied())
    }

    pub(crate) fn failed(status: SolveStatus, diagnostics: impl Into<String>) -> Self {
        Self {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: Vec::new(),
            diagnostics: Some(diagnostics.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Highs,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub backend: Backend,
    pub feasibility_tolerance: f64,
    pub optimality_tolerance: f64,
    /// Run HiGHS presolve. Duals are recovered through postsolve either way.
    pub presolve: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            backend: Backend::Highs,
            feasibility_tolerance: 1e-7,
            optimality_tolerance: 1e-8,
            presolve: true,
        }
    }
}

/// Solve with default settings (HiGHS backend).
pub fn solve(lp: &LinearProgram) -> Result<SolutionWithDuals, SolverError> {
    solve_with(lp, &SolverSettings::default())
}

pub fn solve_with(
    lp: &LinearProgram,
    settings: &SolverSettings,
) -> Result<SolutionWithDuals, SolverError> {
    lp.validate()?;
    match settings.backend {
        Backend::Highs => {
            let mut session = HighsSession::new(lp, settings)?;
            session.solve()
        }
        Backend::Dense => Ok(dense::solve_general(lp, settings.feasibility_tolerance)),
    }
}
