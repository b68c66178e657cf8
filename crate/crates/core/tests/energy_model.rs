mod common;

use common::*;
use nearopt_core::lowering::{to_linear_program, SystemSolution};
use nearopt_core::model::{build_model, fix_design, ModelConfig};
use nearopt_core::profiles::{synthetic, LoadTargets, ProfileSet};
use nearopt_core::sampler::{solve_optimum, SampleError};
use nearopt_core::solver::{solve, SolveStatus, SolverSettings};
use nearopt_core::{DesignPoint, Dimension};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn balance_rows_number_snapshots_times_carriers() {
    for t in [1, 3, 8] {
        let m = baseline(t);
        let low = to_linear_program(&m);
        let n = low.lp.rows.iter().filter(|r| r.name.starts_with("balance[")).count();
        assert_eq!(n, t * m.carriers.len());
    }
}

#[test]
fn single_generator_objective_is_hand_value() {
    let m = toy(DIESEL_ONLY, &ProfileSet::constant(1, 1.0, 0.0, 0.0, 0.0));
    let sol = solve(&to_linear_program(&m).lp).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let hand = 1508.0 / 0.45 * 8760.0;
    assert!(rel(sol.objective, hand) < 1e-9, "{} vs {hand}", sol.objective);
}

#[test]
fn heat_store_round_trip_loses_both_efficiencies() {
    let p = ProfileSet::from_series(vec![0.0, 0.0], vec![0.0, 2.0], vec![0.0, 0.0], vec![1.0, 0.0]);
    let m = toy(SOLAR_TO_STORE, &p);
    let low = to_linear_program(&m);
    let sol = solve(&low.lp).unwrap();
    assert!(sol.is_optimal());
    let w = m.weight;
    let get = |n: &str| sol.value_of(&low.lp, n).unwrap();
    let charged = w * (get("charge[overground-heat-storage,0]") + get("charge[overground-heat-storage,1]"));
    let recovered = w * (get("discharge[overground-heat-storage,0]") + get("discharge[overground-heat-storage,1]"));
    assert!(rel(recovered, 2.0 * w) < 1e-9);
    assert!(rel(recovered, 0.975 * 0.975 * charged) < 1e-9, "{recovered} vs {charged}");
}

#[test]
fn energy_balances_close() {
    let m = baseline(16);
    let low = to_linear_program(&m);
    let sol = solve(&low.lp).unwrap();
    assert!(sol.is_optimal());
    for c in 0..m.carriers.len() {
        for t in 0..m.snapshots {
            let row = low.layout.balance_row(c, t);
            let r = &low.lp.rows[row];
            let residual = low.lp.row_activity(row, &sol.primal) - r.rhs;
            assert!(residual.abs() <= 1e-6, "{}: {residual}", r.name);
        }
    }
}

#[test]
fn raising_a_fuel_price_never_lowers_the_optimum() {
    let t = 8;
    let profiles = synthetic(7, t, LoadTargets::default());
    let base_cfg = ModelConfig::baseline().with_snapshots(t);
    let base = solve(&to_linear_program(&build_model(&base_cfg, &profiles).unwrap()).lp).unwrap().objective;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let mut cfg = base_cfg.clone();
        let k = rng.gen_range(0..cfg.fuels.len());
        cfg.fuels[k].price *= 1.0 + rng.gen_range(0.01..1.0);
        let raised = solve(&to_linear_program(&build_model(&cfg, &profiles).unwrap()).lp).unwrap().objective;
        assert!(raised >= base * (1.0 - 1e-9), "{} raised: {raised} < {base}", cfg.fuels[k].id);
    }
}

#[test]
fn storage_is_cyclic() {
    let m = baseline(24);
    let low = to_linear_program(&m);
    let sol = solve(&low.lp).unwrap();
    assert!(sol.is_optimal());
    for tech in m.technologies.iter().filter(|t| t.is_store()) {
        let get = |n: String| sol.value_of(&low.lp, &n).unwrap();
        let mut soc = get(format!("soc[{},{}]", tech.id, m.snapshots - 1));
        let start = soc;
        for t in 0..m.snapshots {
            soc += m.weight * tech.charge_efficiency * get(format!("charge[{},{t}]", tech.id))
                - m.weight * get(format!("discharge[{},{t}]", tech.id)) / tech.discharge_efficiency;
            assert!((soc - get(format!("soc[{},{t}]", tech.id))).abs() <= 1e-6 * soc.abs().max(1.0));
        }
        assert!((soc - start).abs() <= 1e-6, "{}: {soc} vs {start}", tech.id);
    }
}

#[test]
fn no_demand_means_no_cost_and_no_dispatch() {
    let t = 6;
    let cfg = ModelConfig::baseline().with_snapshots(t);
    let m = build_model(&cfg, &ProfileSet::constant(t, 0.0, 0.0, 0.4, 0.2)).unwrap();
    let low = to_linear_program(&m);
    let sol = solve(&low.lp).unwrap();
    assert!(sol.is_optimal());
    assert!(sol.objective.abs() <= 1e-6);
    for (j, v) in low.lp.vars.iter().enumerate() {
        if ["flow[", "charge[", "discharge[", "import["].iter().any(|p| v.name.starts_with(p)) {
            assert!(sol.primal[j].abs() <= 1e-6, "{} = {}", v.name, sol.primal[j]);
        }
    }
    let opt = solve_optimum(&m, &SolverSettings::default()).unwrap();
    assert!(opt.c_opt.abs() <= 1e-6);
}

#[test]
fn one_and_three_hour_resolution_agree_on_blocky_profiles() {
    let coarse = synthetic(3, 8, LoadTargets::default());
    let triple = |v: &Vec<f64>| v.iter().flat_map(|&x| [x, x, x]).collect::<Vec<_>>();
    let fine = ProfileSet::from_series(
        triple(&coarse.electricity.series),
        triple(&coarse.heat.series),
        triple(&coarse.renewable("wind").unwrap().series),
        triple(&coarse.renewable("solar").unwrap().series),
    );
    let obj = |p: &ProfileSet| {
        let cfg = ModelConfig::baseline().with_snapshots(p.len());
        solve(&to_linear_program(&build_model(&cfg, p).unwrap()).lp).unwrap().objective
    };
    let (a, b) = (obj(&coarse), obj(&fine));
    assert!(rel(a, b) <= 1e-6, "{a} vs {b}");
}

#[test]
fn fixing_the_optimum_reproduces_its_cost() {
    let m = baseline(12);
    let opt = solve_optimum(&m, &SolverSettings::default()).unwrap();
    let fixed = fix_design(&m, opt.point).unwrap();
    let sol = solve(&to_linear_program(&fixed).lp).unwrap();
    assert!(sol.is_optimal());
    assert!(rel(sol.objective, opt.c_opt) <= 1e-6, "{} vs {}", sol.objective, opt.c_opt);
}

#[test]
fn fixing_wind_to_zero_removes_wind() {
    let m = baseline(12);
    let opt = solve_optimum(&m, &SolverSettings::default()).unwrap();
    assert!(opt.point.wind > 0.0);
    let mut p = opt.point;
    p.set(Dimension::Wind, 0.0);
    let fixed = fix_design(&m, p).unwrap();
    let low = to_linear_program(&fixed);
    let sol = solve(&low.lp).unwrap();
    assert!(sol.is_optimal());
    let s = SystemSolution::extract(&fixed, &low, &sol);
    assert!(s.capacity_of(&fixed, "wind").unwrap().abs() <= 1e-9);
}

#[test]
fn zero_green_fuel_without_diesel_is_infeasible() {
    let m = toy(PELLETS_ONLY, &ProfileSet::constant(1, 0.0, 2.0, 0.0, 0.0));
    let fixed = fix_design(&m, DesignPoint::ORIGIN).unwrap();
    let sol = solve(&to_linear_program(&fixed).lp).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn negative_design_coordinate_is_a_domain_error() {
    let m = baseline(2);
    let mut p = DesignPoint::ORIGIN;
    p.set(Dimension::Solar, -1.0);
    assert!(fix_design(&m, p).is_err());
}

#[test]
fn infeasible_model_names_the_unmet_balance() {
    let mut cfg = ModelConfig::from_toml(DIESEL_ONLY).unwrap().with_snapshots(2);
    cfg.technologies[0].existing = 0.5;
    let m = build_model(&cfg, &ProfileSet::constant(2, 1.0, 0.0, 0.0, 0.0)).unwrap();
    match solve_optimum(&m, &SolverSettings::default()) {
        Err(SampleError::Infeasible(report)) => assert!(report.contains("electricity@"), "{report}"),
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("expected infeasible"),
    }
}
