//! Cost optimum and near-optimal space sampling over the five design dimensions.

use std::time::{Duration, Instant};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::design::{DesignPoint, Normalization, NUM_DIMS};
use crate::lowering::{project, to_linear_program, SystemSolution};
use crate::metrics::{compute_metrics, MetricsError};
use crate::model::{fix_design, SystemModel};
use crate::solver::{self, HighsSession, LinearProgram, RowSense, SolverError, SolverSettings};
use crate::store::{model_hash, SampleRecord, SampleStore, StoreHeader};

pub const MAX_SLACK: f64 = 1.25;

pub const DEFAULT_LEVELS: [f64; 9] = [0.0, 0.05, 0.10, 0.20, 0.40, 0.60, 0.80, 1.00, 1.25];

pub const NEAR_OPTIMAL_ROW: &str = "near_optimal_cost";

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("model is infeasible; unmet balances: {0}")]
    Infeasible(String),
    #[error("optimum solve failed: {0}")]
    Optimum(String),
    #[error("slack grid must be nonempty, contain 0 and stay within [0, {MAX_SLACK}]")]
    InvalidGrid,
    #[error("{failed} of {attempted} solves failed (limit {limit:.0}%)")]
    TooManyFailures { failed: usize, attempted: usize, limit: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub levels: Vec<f64>,
    pub n_directions: usize,
    pub seed: u64,
    pub settings: SolverSettings,
    /// Stop after the direction during which this much time has elapsed.
    pub time_budget: Option<Duration>,
    pub max_failure_rate: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS.to_vec(),
            n_directions: 75,
            seed: 42,
            settings: SolverSettings::default(),
            time_budget: None,
            max_failure_rate: 0.05,
        }
    }
}

pub struct Optimum {
    pub c_opt: f64,
    pub point: DesignPoint,
    pub solution: SystemSolution,
}

/// Name the balances that cannot be met, by re-solving with priced load shedding.
fn infeasibility_report(model: &SystemModel, settings: &SolverSettings) -> String {
    let lowered = to_linear_program(model);
    let mut lp = lowered.lp.clone();
    let mut shed = Vec::new();
    for c in 0..model.carriers.len() {
        for t in 0..model.snapshots {
            let row = lowered.layout.balance_row(c, t);
            let up = lp.add_var(format!("shed+[{row}]"), 0.0, f64::INFINITY, 1e12);
            let down = lp.add_var(format!("shed-[{row}]"), 0.0, f64::INFINITY, 1e12);
            lp.rows[row].coeffs.push((up, 1.0));
            lp.rows[row].coeffs.push((down, -1.0));
            shed.push((c, t, up, down));
        }
    }
    match solver::solve_with(&lp, settings) {
        Ok(sol) if sol.is_optimal() => {
            let unmet: Vec<String> = shed
                .iter()
                .filter(|&&(_, _, u, d)| sol.primal[u] + sol.primal[d] > 1e-6)
                .take(10)
                .map(|&(c, t, u, d)| format!("{}@{} ({:.3} MW)", model.carriers[c], t, sol.primal[u] + sol.primal[d]))
                .collect();
            if unmet.is_empty() {
                "none located; capacity or storage rows conflict".into()
            } else {
                unmet.join(", ")
            }
        }
        _ => "diagnostic re-solve failed".into(),
    }
}

pub fn solve_optimum(model: &SystemModel, settings: &SolverSettings) -> Result<Optimum, SampleError> {
    let lowered = to_linear_program(model);
    let sol = solver::solve_with(&lowered.lp, settings)?;
    if !sol.is_optimal() {
        if sol.status == solver::SolveStatus::Infeasible {
            return Err(SampleError::Infeasible(infeasibility_report(model, settings)));
        }
        return Err(SampleError::Optimum(sol.diagnostics.unwrap_or_default()));
    }
    let solution = SystemSolution::extract(model, &lowered, &sol);
    let point = clamp_point(project(model, &solution));
    Ok(Optimum {
        c_opt: sol.objective,
        point,
        solution,
    })
}

/// Append `cost ≤ (1+ε)·c_opt`, with cost the LP's own objective.
pub fn near_optimality_constraint(lp: &LinearProgram, c_opt: f64, eps: f64) -> LinearProgram {
    let mut out = lp.clone();
    let coeffs = lp
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.cost != 0.0)
        .map(|(j, v)| (j, v.cost))
        .collect();
    out.add_row(NEAR_OPTIMAL_ROW, coeffs, RowSense::Le, cost_bound(c_opt, eps));
    out
}

fn cost_bound(c_opt: f64, eps: f64) -> f64 {
    if c_opt > 0.0 {
        (1.0 + eps) * c_opt
    } else {
        0.0
    }
}

/// Uniform direction on the unit sphere in R⁵.
pub fn random_direction(seed: u64) -> [f64; NUM_DIMS] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: [f64; NUM_DIMS] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.map(|x| x / norm);
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `k`-th direction (or retry) under a master seed.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    splitmix(master ^ splitmix(k))
}

/// Snap solver round-off (e.g. `-1e-12`) onto the nonnegative orthant.
fn clamp_point(p: DesignPoint) -> DesignPoint {
    DesignPoint::from_array(p.to_array().map(|v| if v <= 0.0 { 0.0 } else { v }))
}

/// Operational re-solves sharing one warm HiGHS instance.
struct Operational<'a> {
    model: SystemModel,
    lowered: crate::lowering::LoweredModel,
    session: HighsSession,
    base: &'a SystemModel,
    c_opt: f64,
    warm: bool,
}

impl<'a> Operational<'a> {
    fn new(model: &'a SystemModel, start: DesignPoint, c_opt: f64, settings: &SolverSettings) -> Result<Self, SampleError> {
        let fixed = fix_design(model, start).map_err(MetricsError::from)?;
        let lowered = to_linear_program(&fixed);
        let session = HighsSession::new(&lowered.lp, settings)?;
        Ok(Self {
            model: fixed,
            lowered,
            session,
            base: model,
            c_opt,
            warm: false,
        })
    }

    fn evaluate(&mut self, point: DesignPoint) -> Result<crate::metrics::MetricVector, MetricsError> {
        let rows = self.lowered.layout.fix_rows.expect("fixed model");
        let a = point.to_array();
        for k in 0..NUM_DIMS {
            self.session.set_row_bounds(rows[k], a[k], a[k])?;
        }
        let sol = self.session.solve()?;
        if !sol.is_optimal() {
            return Err(MetricsError::Operational {
                status: sol.status,
                diagnostics: sol.diagnostics.unwrap_or_default(),
            });
        }
        if !self.warm {
            self.session.set_presolve(false)?;
            self.warm = true;
        }
        let solution = SystemSolution::extract(&self.model, &self.lowered, &sol);
        compute_metrics(self.base, &solution, self.c_opt)
    }
}

/// Sample the near-optimal space.
///
/// Directions come in antithetic pairs (`u`, `-u`). For each direction the
/// slack levels are visited from the widest to the tightest, so that every
/// re-solve after the first only moves one right-hand side and restarts from
/// the previous basis. Each design is then re-solved operationally for its
/// metrics; the recorded slack is that operational cost over the optimum.
pub fn sample_space(model: &SystemModel, cfg: &SamplerConfig) -> Result<SampleStore, SampleError> {
    let mut levels = cfg.levels.clone();
    if levels.is_empty()
        || !levels.iter().any(|&l| l == 0.0)
        || levels.iter().any(|&l| !(0.0..=MAX_SLACK).contains(&l))
    {
        return Err(SampleError::InvalidGrid);
    }
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let started = Instant::now();

    let opt = solve_optimum(model, &cfg.settings)?;
    info!("optimum {:.6e} NOK at {:?}", opt.c_opt, opt.point);
    let mut operational = Operational::new(model, opt.point, opt.c_opt, &cfg.settings)?;
    let t0 = Instant::now();
    let optimum_metrics = operational.evaluate(opt.point)?;
    let mut records = vec![SampleRecord {
        point: opt.point,
        epsilon: optimum_metrics.slack,
        level: 0.0,
        metrics: optimum_metrics,
        seed: 0,
        direction: [0.0; NUM_DIMS],
        wall_time: t0.elapsed().as_secs_f64(),
    }];

    let lowered = to_linear_program(model);
    let mga = near_optimality_constraint(&lowered.lp, opt.c_opt, levels[0]);
    let bound_row = mga.num_rows() - 1;
    let design = lowered.layout.design;
    let mut session = HighsSession::new(&mga, &cfg.settings)?;
    let mut warm = false;
    let costs_for = |u: &[f64; NUM_DIMS]| {
        let mut c = vec![0.0; mga.num_vars()];
        for k in 0..NUM_DIMS {
            c[design[k]] = u[k];
        }
        c
    };

    let mut attempted = 0usize;
    let mut failed = 0usize;
    let mut truncated = false;
    let mut previous = [0.0; NUM_DIMS];
    for k in 0..cfg.n_directions {
        if let Some(budget) = cfg.time_budget {
            if started.elapsed() >= budget {
                warn!("time budget exhausted after {k} of {} directions", cfg.n_directions);
                truncated = true;
                break;
            }
        }
        let pair_seed = derive_seed(cfg.seed, (k / 2) as u64);
        let u = if k % 2 == 1 {
            previous.map(|x| -x)
        } else {
            random_direction(pair_seed)
        };
        previous = u;
        session.set_costs(&costs_for(&u))?;
        for &level in &levels {
            attempted += 1;
            session.set_row_bounds(bound_row, f64::NEG_INFINITY, cost_bound(opt.c_opt, level))?;
            let mut outcome = None;
            for attempt in 0..2u64 {
                let (seed, dir) = if attempt == 0 {
                    (pair_seed, u)
                } else {
                    let s = derive_seed(pair_seed, 1 + k as u64 * 64 + attempt);
                    let d = random_direction(s);
                    session.set_costs(&costs_for(&d))?;
                    (s, d)
                };
                let t = Instant::now();
                let sol = session.solve()?;
                let result = if sol.is_optimal() {
                    let point = clamp_point(DesignPoint::from_array(std::array::from_fn(|i| sol.primal[design[i]])));
                    operational.evaluate(point).map(|m| (point, m)).map_err(|e| e.to_string())
                } else {
                    Err(sol.diagnostics.unwrap_or_else(|| format!("{:?}", sol.status)))
                };
                if attempt == 1 {
                    session.set_costs(&costs_for(&u))?;
                }
                match result {
                    Ok((point, metrics)) => {
                        if !warm {
                            session.set_presolve(false)?;
                            warm = true;
                        }
                        outcome = Some(SampleRecord {
                            point,
                            epsilon: metrics.slack,
                            level,
                            metrics,
                            seed,
                            direction: dir,
                            wall_time: t.elapsed().as_secs_f64(),
                        });
                        break;
                    }
                    Err(why) => warn!("direction {k} level {level}: attempt {attempt} failed: {why}"),
                }
            }
            match outcome {
                Some(r) => records.push(r),
                None => failed += 1,
            }
        }
        info!(
            "direction {}/{} done, {} records, {:.1}s elapsed",
            k + 1,
            cfg.n_directions,
            records.len(),
            started.elapsed().as_secs_f64()
        );
    }
    if attempted > 0 && failed as f64 > cfg.max_failure_rate * attempted as f64 {
        return Err(SampleError::TooManyFailures {
            failed,
            attempted,
            limit: 100.0 * cfg.max_failure_rate,
        });
    }

    let points: Vec<_> = records.iter().map(|r| r.point.to_array()).collect();
    let mut grid = cfg.levels.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(SampleStore {
        header: StoreHeader {
            c_opt: opt.c_opt,
            optimum_point: opt.point,
            normalization: Normalization::enclosing(points.iter()).expect("optimum record"),
            config_hash: model_hash(model),
            technology_count: model.technologies.len(),
            levels: grid,
            n_directions: cfg.n_directions,
            max_slack: MAX_SLACK,
            failed_solves: failed,
            truncated,
        },
        records,
    })
}
