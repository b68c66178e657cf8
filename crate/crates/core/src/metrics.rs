//! The seven interface metrics of a solved system configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::DesignPoint;
use crate::lowering::{to_linear_program, SystemSolution};
use crate::model::{fix_design, ConfigError, PriceWeighting, SystemModel, TechKind, ELECTRICITY, HEAT, GEOTHERMAL_HEAT};
use crate::solver::{self, SolveStatus, SolverError, SolverSettings};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no balance duals available; prices cannot be computed")]
    PricesUnavailable,
    #[error("land-use table has no entry for `{0}`")]
    MissingLandUse(String),
    #[error("operational re-solve ended with status {status:?}: {diagnostics}")]
    Operational { status: SolveStatus, diagnostics: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Slack,
    ElecPrice,
    HeatPrice,
    Co2,
    Vulnerability,
    VisualImpact,
    LandUse,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Slack,
        Metric::ElecPrice,
        Metric::HeatPrice,
        Metric::Co2,
        Metric::Vulnerability,
        Metric::VisualImpact,
        Metric::LandUse,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Slack => "slack",
            Metric::ElecPrice => "elec-price",
            Metric::HeatPrice => "heat-price",
            Metric::Co2 => "co2",
            Metric::Vulnerability => "vulnerability",
            Metric::VisualImpact => "visual-impact",
            Metric::LandUse => "land-use",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::Slack | Metric::Vulnerability => "-",
            Metric::ElecPrice | Metric::HeatPrice => "NOK/MWh",
            Metric::Co2 => "t/yr",
            Metric::VisualImpact => "MW",
            Metric::LandUse => "m2",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MetricVector {
    pub slack: f64,
    pub elec_price: f64,
    pub heat_price: f64,
    pub co2: f64,
    pub vulnerability: f64,
    pub visual_impact: f64,
    pub land_use: f64,
}

impl MetricVector {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.slack,
            self.elec_price,
            self.heat_price,
            self.co2,
            self.vulnerability,
            self.visual_impact,
            self.land_use,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            slack: a[0],
            elec_price: a[1],
            heat_price: a[2],
            co2: a[3],
            vulnerability: a[4],
            visual_impact: a[5],
            land_use: a[6],
        }
    }

    pub fn get(&self, m: Metric) -> f64 {
        self.to_array()[m.index()]
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
            && (0.0..=1.0).contains(&self.vulnerability)
            && self.visual_impact >= 0.0
            && self.land_use >= 0.0
            && self.slack >= -1e-6
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityInputs {
    /// 1 - VRE share of primary energy.
    pub c: f64,
    /// 1 - imported share of primary energy.
    pub d: f64,
    /// 1 - share of technologies present.
    pub e: f64,
    /// min(1, heat_pnorm).
    pub f: f64,
    /// Heat storage capacity over the anchor capacity.
    pub heat_pnorm: f64,
}

/// `1 - (0.2c + 0.5d + 0.1e + 0.2f)`, evaluated in complement form (the
/// weights sum to one) so that the corner cases come out exact in floating point.
pub fn vulnerability(inp: &VulnerabilityInputs) -> f64 {
    0.1 * (1.0 - inp.e) + 0.2 * (1.0 - inp.c) + 0.2 * (1.0 - inp.f) + 0.5 * (1.0 - inp.d)
}

/// Stores holding district or geothermal heat.
fn is_heat_store(model: &SystemModel, k: usize) -> bool {
    let t = &model.technologies[k];
    t.is_store() && matches!(t.store_carrier(), Some(HEAT) | Some(GEOTHERMAL_HEAT))
}

pub fn vulnerability_inputs(model: &SystemModel, solution: &SystemSolution) -> VulnerabilityInputs {
    let mut vre = 0.0;
    let mut ambient = 0.0;
    for (k, tech) in model.technologies.iter().enumerate() {
        let flow = solution.annual_flow[k];
        match tech.kind {
            TechKind::VreGenerator => vre += flow * tech.outputs[0].efficiency,
            // Ground-source heat: everything above the electricity input.
            TechKind::HeatPump if tech.extra_inputs.is_empty() => {
                let cop: f64 = tech.outputs.iter().map(|o| o.efficiency).sum();
                ambient += flow * (cop - 1.0);
            }
            _ => {}
        }
    }
    let fuels: f64 = solution.fuel_use.iter().sum();
    let imported: f64 = model
        .fuels
        .iter()
        .zip(&solution.fuel_use)
        .filter(|(f, _)| f.imported)
        .map(|(_, u)| u)
        .sum();
    let primary = vre + fuels + ambient;
    let (c, d) = if primary > 0.0 {
        (1.0 - vre / primary, 1.0 - imported / primary)
    } else {
        (1.0, 1.0)
    };
    let threshold = model.metrics.diversity_threshold;
    let present = solution.capacity.iter().filter(|&&c| c >= threshold).count();
    let e = 1.0 - present as f64 / model.technologies.len().max(1) as f64;
    let storage: f64 = (0..model.technologies.len())
        .filter(|&k| is_heat_store(model, k))
        .map(|k| solution.capacity[k])
        .sum();
    let heat_pnorm = storage / model.metrics.heat_storage_anchor_mwh;
    VulnerabilityInputs {
        c: c.clamp(0.0, 1.0),
        d: d.clamp(0.0, 1.0),
        e,
        f: heat_pnorm.min(1.0),
        heat_pnorm,
    }
}

/// Fossil fuel burned (MWh thermal) times the emission factor, t/yr.
pub fn co2(model: &SystemModel, solution: &SystemSolution, emission_factor: f64) -> f64 {
    model
        .fuels
        .iter()
        .zip(&solution.fuel_use)
        .filter(|(f, _)| f.fossil)
        .map(|(_, u)| u * emission_factor)
        .sum()
}

/// Σ capacity·footprint over built technologies plus Σ fuel·footprint over used fuels, m².
pub fn land_use_from<'a>(
    table: &crate::model::LandUseTable,
    capacities: impl IntoIterator<Item = (&'a str, f64)>,
    fuels: impl IntoIterator<Item = (&'a str, f64)>,
) -> Result<f64, MetricsError> {
    let mut total = 0.0;
    for (id, cap) in capacities {
        if cap > 0.0 {
            let fp = table.technologies.get(id).ok_or_else(|| MetricsError::MissingLandUse(id.into()))?;
            total += cap * fp;
        }
    }
    for (id, mwh) in fuels {
        if mwh > 0.0 {
            let fp = table.fuels.get(id).ok_or_else(|| MetricsError::MissingLandUse(id.into()))?;
            total += mwh * fp;
        }
    }
    Ok(total)
}

pub fn land_use(model: &SystemModel, solution: &SystemSolution) -> Result<f64, MetricsError> {
    land_use_from(
        &model.land_use,
        model.technologies.iter().map(|t| t.id.as_str()).zip(solution.capacity.iter().copied()),
        model.fuels.iter().map(|f| f.id.as_str()).zip(solution.fuel_use.iter().copied()),
    )
}

/// Installed wind capacity, MW.
pub fn visual_impact(model: &SystemModel, solution: &SystemSolution) -> f64 {
    model
        .technologies
        .iter()
        .zip(&solution.capacity)
        .filter(|(t, _)| t.kind == TechKind::VreGenerator && t.profile.as_deref() == Some("wind"))
        .map(|(_, c)| c)
        .sum()
}

/// Annual mean of one carrier's per-snapshot prices (NOK/MWh).
pub fn mean_price(model: &SystemModel, solution: &SystemSolution, carrier: &str) -> Result<f64, MetricsError> {
    let c = model.carrier_index(carrier).ok_or(MetricsError::PricesUnavailable)?;
    let prices = solution.prices.get(c).ok_or(MetricsError::PricesUnavailable)?;
    let load = model.load_for(carrier).map(|l| l.series.as_slice());
    let total: f64 = load.map_or(0.0, |l| l.iter().sum());
    let unweighted = || prices.iter().sum::<f64>() / prices.len() as f64;
    Ok(match (model.metrics.price_weighting, load) {
        (PriceWeighting::Demand, Some(l)) if total > 0.0 => {
            prices.iter().zip(l).map(|(p, w)| p * w).sum::<f64>() / total
        }
        _ => unweighted(),
    })
}

/// Slack of a cost relative to the optimum; a zero optimum admits only zero cost.
pub fn slack_of(cost: f64, c_opt: f64) -> f64 {
    if c_opt > 0.0 {
        cost / c_opt - 1.0
    } else if cost.abs() <= 1e-9 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// All seven metrics of an operationally solved configuration.
pub fn compute_metrics(
    model: &SystemModel,
    solution: &SystemSolution,
    c_opt: f64,
) -> Result<MetricVector, MetricsError> {
    let inputs = vulnerability_inputs(model, solution);
    Ok(MetricVector {
        slack: slack_of(solution.objective, c_opt),
        elec_price: mean_price(model, solution, ELECTRICITY)?,
        heat_price: mean_price(model, solution, HEAT)?,
        co2: co2(model, solution, model.metrics.emission_factor),
        vulnerability: vulnerability(&inputs),
        visual_impact: visual_impact(model, solution),
        land_use: land_use(model, solution)?,
    })
}

/// Re-solve with the design pinned to `point` and return the physical solution.
pub fn operational_solution(
    model: &SystemModel,
    point: DesignPoint,
    settings: &SolverSettings,
) -> Result<SystemSolution, MetricsError> {
    let fixed = fix_design(model, point)?;
    let lowered = to_linear_program(&fixed);
    let sol = solver::solve_with(&lowered.lp, settings)?;
    if !sol.is_optimal() {
        return Err(MetricsError::Operational {
            status: sol.status,
            diagnostics: sol.diagnostics.unwrap_or_default(),
        });
    }
    Ok(SystemSolution::extract(&fixed, &lowered, &sol))
}

/// (electricity, heat) price of the design `point` operated at least cost, NOK/MWh.
pub fn operational_prices(model: &SystemModel, point: DesignPoint) -> Result<(f64, f64), MetricsError> {
    let sol = operational_solution(model, point, &SolverSettings::default())?;
    Ok((mean_price(model, &sol, ELECTRICITY)?, mean_price(model, &sol, HEAT)?))
}
