//! Lowering of a [`SystemModel`] to a [`LinearProgram`] and extraction of
//! physical quantities from its solution.
//!
//! Flow variables are in MW and held constant over a snapshot of `w` hours;
//! stores carry their state of charge in MWh. Balance rows are written in MW,
//! so their duals are NOK per MW-snapshot and must be divided by `w` to read
//! as NOK/MWh.

use crate::design::{DesignPoint, Dimension, NUM_DIMS};
use crate::model::{SystemModel, TechKind, TechnologySpec};
use crate::solver::{LinearProgram, RowSense, SolutionWithDuals};

const INF: f64 = f64::INFINITY;

/// Column indices of one technology.
#[derive(Debug, Clone, PartialEq)]
pub enum TechColumns {
    /// Primary input flow per snapshot (output flow for VRE).
    Flow { ext: Option<usize>, flow: usize },
    Store {
        ext: Option<usize>,
        charge: usize,
        discharge: usize,
        soc: usize,
    },
}

impl TechColumns {
    pub fn ext(&self) -> Option<usize> {
        match *self {
            TechColumns::Flow { ext, .. } | TechColumns::Store { ext, .. } => ext,
        }
    }
}

/// Where everything lives in the lowered LP. Per-snapshot columns are
/// contiguous: column `base + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub snapshots: usize,
    pub weight: f64,
    /// First `balance[carrier,t]` row; rows are carrier-major.
    pub balance_start: usize,
    pub technologies: Vec<TechColumns>,
    /// First import column per fuel.
    pub imports: Vec<usize>,
    /// Free columns holding the five design aggregates.
    pub design: [usize; NUM_DIMS],
    /// `design[dim]` defining rows.
    pub design_rows: [usize; NUM_DIMS],
    /// `fix[dim]` rows when the model carries a fixed design.
    pub fix_rows: Option<[usize; NUM_DIMS]>,
}

impl Layout {
    pub fn balance_row(&self, carrier: usize, t: usize) -> usize {
        self.balance_start + carrier * self.snapshots + t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoweredModel {
    pub lp: LinearProgram,
    pub layout: Layout,
}

pub fn balance_row_name(carrier: &str, t: usize) -> String {
    format!("balance[{carrier},{t}]")
}

/// Design coefficient (MNOK/yr per MW or MWh of new capacity) of a technology.
fn design_weight(tech: &TechnologySpec) -> Option<(Dimension, f64)> {
    tech.dimension.map(|d| (d, tech.capital_cost))
}

/// Lower `model` to an LP whose objective is total annual system cost in NOK.
pub fn to_linear_program(model: &SystemModel) -> LoweredModel {
    let n_t = model.snapshots;
    let w = model.weight;
    let n_c = model.carriers.len();
    let mut lp = LinearProgram::new();

    // Per-(carrier, t) balance terms collected while creating columns.
    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_c * n_t];
    let bal = |c: usize, t: usize| c * n_t + t;
    let cidx = |carrier: &str| model.carrier_index(carrier).expect("validated carrier");

    let mut design_terms: [Vec<(usize, f64)>; NUM_DIMS] = Default::default();
    let mut deferred: Vec<(String, Vec<(usize, f64)>, RowSense, f64)> = Vec::new();
    let mut technologies = Vec::with_capacity(model.technologies.len());

    for tech in &model.technologies {
        let ext = if tech.extendable {
            let upper = tech.limit.map_or(INF, |l| l - tech.existing);
            let j = lp.add_var(format!("ext[{}]", tech.id), 0.0, upper, 1e6 * tech.capital_cost);
            if let Some((d, coef)) = design_weight(tech) {
                design_terms[d.index()].push((j, coef));
            }
            Some(j)
        } else {
            None
        };

        match tech.kind {
            TechKind::Store => {
                let carrier = cidx(tech.store_carrier().expect("store carrier"));
                let from = cidx(tech.charge_carrier().expect("store carrier"));
                let soc_upper = if ext.is_some() { INF } else { tech.existing };
                let charge = lp.vars.len();
                for t in 0..n_t {
                    let j = lp.add_var(format!("charge[{},{t}]", tech.id), 0.0, INF, 0.0);
                    balance[bal(from, t)].push((j, -1.0));
                }
                let discharge = lp.vars.len();
                for t in 0..n_t {
                    let j = lp.add_var(format!("discharge[{},{t}]", tech.id), 0.0, INF, 0.0);
                    balance[bal(carrier, t)].push((j, 1.0));
                }
                let soc = lp.vars.len();
                for t in 0..n_t {
                    lp.add_var(format!("soc[{},{t}]", tech.id), 0.0, soc_upper, 0.0);
                }
                for t in 0..n_t {
                    let prev = (t + n_t - 1) % n_t;
                    let mut row = vec![
                        (soc + t, 1.0),
                        (charge + t, -w * tech.charge_efficiency),
                        (discharge + t, w / tech.discharge_efficiency),
                    ];
                    if prev != t {
                        row.push((soc + prev, -1.0));
                    } else {
                        // A single snapshot closes on itself.
                        row[0].1 = 0.0;
                    }
                    deferred.push((format!("soc_balance[{},{t}]", tech.id), row, RowSense::Eq, 0.0));
                }
                if let Some(e) = ext {
                    for t in 0..n_t {
                        deferred.push((
                            format!("soc_cap[{},{t}]", tech.id),
                            vec![(soc + t, 1.0), (e, -1.0)],
                            RowSense::Le,
                            tech.existing,
                        ));
                    }
                }
                technologies.push(TechColumns::Store {
                    ext,
                    charge,
                    discharge,
                    soc,
                });
            }
            TechKind::VreGenerator => {
                let profile = &model
                    .vre_profile(tech.profile.as_deref().expect("vre profile"))
                    .expect("validated profile")
                    .series;
                let out = &tech.outputs[0];
                let carrier = cidx(&out.carrier);
                let flow = lp.vars.len();
                for (t, &cf) in profile.iter().enumerate() {
                    let upper = if ext.is_some() { INF } else { cf * tech.existing };
                    let j = lp.add_var(
                        format!("flow[{},{t}]", tech.id),
                        0.0,
                        upper,
                        w * tech.marginal_cost,
                    );
                    balance[bal(carrier, t)].push((j, out.efficiency));
                    if let Some(e) = ext {
                        deferred.push((
                            format!("capacity[{},{t}]", tech.id),
                            vec![(j, 1.0), (e, -cf)],
                            RowSense::Le,
                            cf * tech.existing,
                        ));
                    }
                }
                technologies.push(TechColumns::Flow { ext, flow });
            }
            _ => {
                let input = cidx(tech.input.as_deref().expect("converter input"));
                let factor = tech.basis_factor();
                let upper = if ext.is_some() { INF } else { tech.existing / factor };
                let flow = lp.vars.len();
                for t in 0..n_t {
                    let j = lp.add_var(
                        format!("flow[{},{t}]", tech.id),
                        0.0,
                        upper,
                        w * tech.marginal_cost,
                    );
                    balance[bal(input, t)].push((j, -1.0));
                    for extra in &tech.extra_inputs {
                        balance[bal(cidx(&extra.carrier), t)].push((j, -extra.ratio));
                    }
                    for o in &tech.outputs {
                        balance[bal(cidx(&o.carrier), t)].push((j, o.efficiency));
                    }
                    if let Some(e) = ext {
                        deferred.push((
                            format!("capacity[{},{t}]", tech.id),
                            vec![(j, factor), (e, -1.0)],
                            RowSense::Le,
                            tech.existing,
                        ));
                    }
                }
                technologies.push(TechColumns::Flow { ext, flow });
            }
        }
    }

    // Waste-heat recovery: the lifted low-temperature heat (COP - 1 per unit
    // of electricity) cannot exceed the recoverable share of the sources' input.
    for (k, tech) in model.technologies.iter().enumerate() {
        if tech.kind != TechKind::WasteHeatRecovery {
            continue;
        }
        let TechColumns::Flow { flow, .. } = technologies[k] else { unreachable!() };
        let lift = tech.outputs.iter().map(|o| o.efficiency).sum::<f64>() - 1.0;
        for t in 0..n_t {
            let mut row = vec![(flow + t, lift)];
            for s in &tech.waste_heat_sources {
                let src = model.technology_index(&s.technology).expect("validated source");
                if let TechColumns::Flow { flow: sf, .. } = technologies[src] {
                    row.push((sf + t, -s.fraction));
                }
            }
            deferred.push((format!("waste_heat[{},{t}]", tech.id), row, RowSense::Le, 0.0));
        }
    }

    let mut imports = Vec::with_capacity(model.fuels.len());
    for fuel in &model.fuels {
        let carrier = cidx(&fuel.id);
        let base = lp.vars.len();
        for t in 0..n_t {
            let j = lp.add_var(format!("import[{},{t}]", fuel.id), 0.0, INF, w * fuel.price);
            balance[bal(carrier, t)].push((j, 1.0));
            if fuel.green {
                design_terms[Dimension::GreenFuelImports.index()].push((j, w * fuel.price / 1e6));
            }
        }
        imports.push(base);
    }

    let design: [usize; NUM_DIMS] =
        std::array::from_fn(|k| lp.add_var(format!("design[{}]", Dimension::ALL[k]), -INF, INF, 0.0));

    let balance_start = lp.rows.len();
    for (c, carrier) in model.carriers.iter().enumerate() {
        let load = model.load_for(carrier);
        for t in 0..n_t {
            let rhs = load.map_or(0.0, |l| l.series[t]);
            let terms = std::mem::take(&mut balance[bal(c, t)]);
            lp.add_row(balance_row_name(carrier, t), terms, RowSense::Eq, rhs);
        }
    }
    for (name, coeffs, sense, rhs) in deferred {
        lp.add_row(name, coeffs, sense, rhs);
    }
    let design_rows: [usize; NUM_DIMS] = std::array::from_fn(|k| {
        let mut row = vec![(design[k], 1.0)];
        row.extend(design_terms[k].iter().map(|&(j, a)| (j, -a)));
        lp.add_row(format!("design[{}]", Dimension::ALL[k]), row, RowSense::Eq, 0.0)
    });
    let fix_rows = model.fixed_design.map(|p| {
        std::array::from_fn(|k| {
            let d = Dimension::ALL[k];
            lp.add_row(format!("fix[{d}]"), vec![(design[k], 1.0)], RowSense::Eq, p.get(d))
        })
    });

    LoweredModel {
        lp,
        layout: Layout {
            snapshots: n_t,
            weight: w,
            balance_start,
            technologies,
            imports,
            design,
            design_rows,
            fix_rows,
        },
    }
}

/// Physical summary of an optimal solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSolution {
    /// Total annual cost, NOK.
    pub objective: f64,
    /// New capacity per technology (0 for non-extendable), MW or MWh.
    pub new_capacity: Vec<f64>,
    /// Existing plus new capacity per technology.
    pub capacity: Vec<f64>,
    /// Annual fuel imports per fuel, MWh thermal.
    pub fuel_use: Vec<f64>,
    /// Annual energy through the primary flow of each technology, MWh
    /// (input for converters, output for VRE, discharge for stores).
    pub annual_flow: Vec<f64>,
    /// Balance duals divided by the snapshot weight, NOK/MWh, carrier-major.
    pub prices: Vec<Vec<f64>>,
}

impl SystemSolution {
    pub fn extract(model: &SystemModel, lowered: &LoweredModel, sol: &SolutionWithDuals) -> Self {
        let layout = &lowered.layout;
        let x = &sol.primal;
        let n_t = layout.snapshots;
        let w = layout.weight;
        let sum = |base: usize| -> f64 { x[base..base + n_t].iter().sum::<f64>() * w };
        let mut new_capacity = Vec::new();
        let mut capacity = Vec::new();
        let mut annual_flow = Vec::new();
        for (tech, cols) in model.technologies.iter().zip(&layout.technologies) {
            let ext = cols.ext().map_or(0.0, |j| x[j].max(0.0));
            new_capacity.push(ext);
            capacity.push(tech.existing + ext);
            annual_flow.push(match *cols {
                TechColumns::Flow { flow, .. } => sum(flow),
                TechColumns::Store { discharge, .. } => sum(discharge),
            });
        }
        let fuel_use = layout.imports.iter().map(|&b| sum(b)).collect();
        let prices = if sol.duals.is_empty() {
            Vec::new()
        } else {
            (0..model.carriers.len())
                .map(|c| (0..n_t).map(|t| sol.duals[layout.balance_row(c, t)] / w).collect())
                .collect()
        };
        Self {
            objective: sol.objective,
            new_capacity,
            capacity,
            fuel_use,
            annual_flow,
            prices,
        }
    }

    pub fn capacity_of(&self, model: &SystemModel, id: &str) -> Option<f64> {
        model.technology_index(id).map(|k| self.capacity[k])
    }

    pub fn fuel_use_of(&self, model: &SystemModel, id: &str) -> Option<f64> {
        model.fuel_index(id).map(|k| self.fuel_use[k])
    }
}

/// Aggregate new capacities (MW/MWh) and annual fuel imports (MWh) into the
/// five cost-denominated design dimensions, MNOK/yr.
pub fn project_quantities(model: &SystemModel, new_capacity: &[f64], fuel_use: &[f64]) -> DesignPoint {
    let mut acc = [0.0; NUM_DIMS];
    for (tech, &cap) in model.technologies.iter().zip(new_capacity) {
        if let Some((d, coef)) = design_weight(tech) {
            acc[d.index()] += coef * cap;
        }
    }
    for (fuel, &mwh) in model.fuels.iter().zip(fuel_use) {
        if fuel.green {
            acc[Dimension::GreenFuelImports.index()] += fuel.price * mwh / 1e6;
        }
    }
    DesignPoint::from_array(acc)
}

pub fn project(model: &SystemModel, solution: &SystemSolution) -> DesignPoint {
    project_quantities(model, &solution.new_capacity, &solution.fuel_use)
}
