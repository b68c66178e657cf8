use std::ffi::{c_void, CString};

use highs_sys::*;

use super::{LinearProgram, SolutionWithDuals, SolveStatus, SolverError, SolverSettings};

/// A loaded HiGHS instance.
///
/// Keeping the instance alive between solves lets HiGHS restart from the
/// previous basis after objective or bound changes, which is what makes
/// hundreds of near-optimal re-solves affordable.
pub struct HighsSession {
    ptr: *mut c_void,
    num_cols: usize,
    num_rows: usize,
    presolve: bool,
}

// The instance is only ever touched through `&mut self`.
unsafe impl Send for HighsSession {}

impl Drop for HighsSession {
    fn drop(&mut self) {
        unsafe { Highs_destroy(self.ptr) }
    }
}

fn check(status: HighsInt, call: &'static str) -> Result<(), SolverError> {
    if status == kHighsStatusError {
        Err(SolverError::Backend { call, status })
    } else {
        Ok(())
    }
}

fn clamp_inf(v: f64, inf: f64) -> f64 {
    if v >= inf {
        inf
    } else if v <= -inf {
        -inf
    } else {
        v
    }
}

impl HighsSession {
    pub fn new(lp: &LinearProgram, settings: &SolverSettings) -> Result<Self, SolverError> {
        lp.validate()?;
        let ptr = unsafe { Highs_create() };
        let mut session = Self {
            ptr,
            num_cols: lp.num_vars(),
            num_rows: lp.num_rows(),
            presolve: settings.presolve,
        };
        session.set_bool("output_flag", false)?;
        session.set_int("threads", 1)?;
        session.set_double("primal_feasibility_tolerance", settings.feasibility_tolerance)?;
        session.set_double("dual_feasibility_tolerance", settings.optimality_tolerance)?;
        session.set_presolve(settings.presolve)?;

        let inf = unsafe { Highs_getInfinity(ptr) };
        let cost: Vec<f64> = lp.vars.iter().map(|v| v.cost).collect();
        let col_lower: Vec<f64> = lp.vars.iter().map(|v| clamp_inf(v.lower, inf)).collect();
        let col_upper: Vec<f64> = lp.vars.iter().map(|v| clamp_inf(v.upper, inf)).collect();
        let (row_lower, row_upper): (Vec<f64>, Vec<f64>) = lp
            .rows
            .iter()
            .map(|r| {
                let (lo, hi) = r.bounds();
                (clamp_inf(lo, inf), clamp_inf(hi, inf))
            })
            .unzip();
        let (starts, index, value) = lp.to_csc();
        let status = unsafe {
            Highs_passLp(
                ptr,
                lp.num_vars() as HighsInt,
                lp.num_rows() as HighsInt,
                value.len() as HighsInt,
                kHighsMatrixFormatColwise,
                kHighsObjSenseMinimize,
                0.0,
                cost.as_ptr(),
                col_lower.as_ptr(),
                col_upper.as_ptr(),
                row_lower.as_ptr(),
                row_upper.as_ptr(),
                starts.as_ptr(),
                index.as_ptr(),
                value.as_ptr(),
            )
        };
        check(status, "Highs_passLp")?;
        Ok(session)
    }

    pub fn set_bool(&mut self, name: &str, value: bool) -> Result<(), SolverError> {
        let c = CString::new(name).expect("option name");
        check(
            unsafe { Highs_setBoolOptionValue(self.ptr, c.as_ptr(), value as HighsInt) },
            "Highs_setBoolOptionValue",
        )
    }

    pub fn set_int(&mut self, name: &str, value: i32) -> Result<(), SolverError> {
        let c = CString::new(name).expect("option name");
        check(
            unsafe { Highs_setIntOptionValue(self.ptr, c.as_ptr(), value as HighsInt) },
            "Highs_setIntOptionValue",
        )
    }

    pub fn set_double(&mut self, name: &str, value: f64) -> Result<(), SolverError> {
        let c = CString::new(name).expect("option name");
        check(
            unsafe { Highs_setDoubleOptionValue(self.ptr, c.as_ptr(), value) },
            "Highs_setDoubleOptionValue",
        )
    }

    pub fn set_string(&mut self, name: &str, value: &str) -> Result<(), SolverError> {
        let c = CString::new(name).expect("option name");
        let v = CString::new(value).expect("option value");
        check(
            unsafe { Highs_setStringOptionValue(self.ptr, c.as_ptr(), v.as_ptr()) },
            "Highs_setStringOptionValue",
        )
    }

    pub fn set_presolve(&mut self, on: bool) -> Result<(), SolverError> {
        self.set_string("presolve", if on { "on" } else { "off" })
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    /// Replace the full objective vector.
    pub fn set_costs(&mut self, costs: &[f64]) -> Result<(), SolverError> {
        if costs.len() != self.num_cols {
            return Err(SolverError::Malformed(format!(
                "expected {} costs, got {}",
                self.num_cols,
                costs.len()
            )));
        }
        if self.num_cols == 0 {
            return Ok(());
        }
        check(
            unsafe {
                Highs_changeColsCostByRange(self.ptr, 0, (self.num_cols - 1) as HighsInt, costs.as_ptr())
            },
            "Highs_changeColsCostByRange",
        )
    }

    pub fn set_row_bounds(&mut self, row: usize, lower: f64, upper: f64) -> Result<(), SolverError> {
        let inf = unsafe { Highs_getInfinity(self.ptr) };
        check(
            unsafe {
                Highs_changeRowBounds(
                    self.ptr,
                    row as HighsInt,
                    clamp_inf(lower, inf),
                    clamp_inf(upper, inf),
                )
            },
            "Highs_changeRowBounds",
        )
    }

    pub fn set_col_bounds(&mut self, col: usize, lower: f64, upper: f64) -> Result<(), SolverError> {
        let inf = unsafe { Highs_getInfinity(self.ptr) };
        check(
            unsafe {
                Highs_changeColBounds(self.ptr, col as HighsInt, clamp_inf(lower, inf), clamp_inf(upper, inf))
            },
            "Highs_changeColBounds",
        )
    }

    fn run(&mut self) -> Result<HighsInt, SolverError> {
        check(unsafe { Highs_run(self.ptr) }, "Highs_run")?;
        Ok(unsafe { Highs_getModelStatus(self.ptr) })
    }

    /// Solve from the current state (warm if a basis exists).
    pub fn solve(&mut self) -> Result<SolutionWithDuals, SolverError> {
        let mut status = self.run()?;
        if status == kHighsModelStatusUnboundedOrInfeasible && self.presolve {
            // Presolve cannot tell the two apart; ask the simplex directly.
            self.set_presolve(false)?;
            let rerun = self.run();
            self.set_presolve(true)?;
            status = rerun?;
        }
        let iterations = self.simplex_iterations();
        match status {
            s if s == kHighsModelStatusOptimal || s == kHighsModelStatusModelEmpty => {}
            s if s == kHighsModelStatusInfeasible => {
                return Ok(SolutionWithDuals::failed(SolveStatus::Infeasible, "HiGHS: infeasible"));
            }
            s if s == kHighsModelStatusUnbounded => {
                return Ok(SolutionWithDuals::failed(SolveStatus::Unbounded, "HiGHS: unbounded"));
            }
            s if s == kHighsModelStatusUnboundedOrInfeasible => {
                return Ok(SolutionWithDuals::failed(
                    SolveStatus::Infeasible,
                    "HiGHS: unbounded or infeasible (dual infeasible without presolve)",
                ));
            }
            s => {
                return Ok(SolutionWithDuals::failed(
                    SolveStatus::NumericalFailure,
                    format!("HiGHS model status {s} after {iterations} simplex iterations"),
                ));
            }
        }
        let mut col_value = vec![0.0; self.num_cols];
        let mut col_dual = vec![0.0; self.num_cols];
        let mut row_value = vec![0.0; self.num_rows];
        let mut row_dual = vec![0.0; self.num_rows];
        check(
            unsafe {
                Highs_getSolution(
                    self.ptr,
                    col_value.as_mut_ptr(),
                    col_dual.as_mut_ptr(),
                    row_value.as_mut_ptr(),
                    row_dual.as_mut_ptr(),
                )
            },
            "Highs_getSolution",
        )?;
        let objective = unsafe { Highs_getObjectiveValue(self.ptr) };
        Ok(SolutionWithDuals {
            status: SolveStatus::Optimal,
            objective,
            primal: col_value,
            duals: row_dual,
            diagnostics: None,
        })
    }

    pub fn simplex_iterations(&self) -> i64 {
        let name = CString::new("simplex_iteration_count").expect("info name");
        let mut value: HighsInt = 0;
        unsafe { Highs_getIntInfoValue(self.ptr, name.as_ptr(), &mut value) };
        value as i64
    }
}
