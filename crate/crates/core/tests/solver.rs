mod common;

use gridforge::demo::{random_instance, reference_weights, RandomShape};
use gridforge::formulation::{build_continuous_model, build_discrete_model, ModelIR, Sense};
use gridforge::model::{
    BessSpec, DvfsConfig, DvfsMode, InstanceSpec, InterconnectionLimits, MarketPrices, Scenario, TimeGrid,
};
use gridforge::solver::{fix_integers_resolve, solve_lp, solve_milp, LpStatus, MilpStatus, SolverConfig};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn unit_box_lp_has_unit_duals() {
    let mut ir = ModelIR::new();
    let x = ir.add_var("x".into(), 0.0, f64::INFINITY);
    let y = ir.add_var("y".into(), 0.0, f64::INFINITY);
    ir.add_constraint("cx".into(), vec![(x, 1.0)], Sense::Le, 1.0);
    ir.add_constraint("cy".into(), vec![(y, 1.0)], Sense::Le, 1.0);
    ir.set_objective(vec![(x, 1.0), (y, 1.0)]);
    let sol = solve_lp(&ir, &cfg());
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_eq!(sol.objective, 2.0);
    assert!((sol.duals[0] - 1.0).abs() < 1e-12 && (sol.duals[1] - 1.0).abs() < 1e-12, "{:?}", sol.duals);
    assert!(!sol.degenerate);
}

#[test]
fn duplicate_row_is_degenerate() {
    let mut ir = ModelIR::new();
    let x = ir.add_var("x".into(), 0.0, f64::INFINITY);
    ir.add_constraint("a".into(), vec![(x, 1.0)], Sense::Le, 1.0);
    ir.add_constraint("b".into(), vec![(x, 1.0)], Sense::Le, 1.0);
    ir.set_objective(vec![(x, 1.0)]);
    let sol = solve_lp(&ir, &cfg());
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_eq!(sol.objective, 1.0);
    assert!(sol.degenerate);
    assert!((sol.duals[0] + sol.duals[1] - 1.0).abs() < 1e-12);
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let mut ir = ModelIR::new();
    let x = ir.add_var("x".into(), f64::NEG_INFINITY, f64::INFINITY);
    ir.add_constraint("lo".into(), vec![(x, 1.0)], Sense::Ge, 1.0);
    ir.add_constraint("hi".into(), vec![(x, 1.0)], Sense::Le, 0.0);
    assert_eq!(solve_lp(&ir, &cfg()).status, LpStatus::Infeasible);
}

fn small_discrete() -> ModelIR {
    let spec = random_instance(
        17,
        RandomShape {
            periods: 3,
            jobs: 2,
            scenarios: 2,
            mode: DvfsMode::Discrete,
            levels: 2,
            bess: true,
        },
    );
    build_discrete_model(&spec).unwrap()
}

#[test]
fn fully_fixed_binaries_need_one_node() {
    let ir = small_discrete();
    let best = solve_milp(&ir, &cfg());
    assert_eq!(best.status, MilpStatus::Optimal);
    let mut fixed = ir.clone();
    for j in 0..fixed.num_vars() {
        if fixed.variables[j].integer {
            let v = best.primal[j];
            fixed.set_bounds(j, v, v);
        }
    }
    let sol = solve_milp(&fixed, &cfg());
    assert_eq!(sol.status, MilpStatus::Optimal);
    assert_eq!(sol.nodes, 1);
    let lp = solve_lp(&fixed, &cfg());
    assert!((sol.objective - lp.objective).abs() <= 1e-9 * lp.objective.abs().max(1.0));
}

#[test]
fn infeasible_root_stops_after_one_node() {
    let mut ir = small_discrete();
    let theta = ir.var("theta").unwrap();
    ir.add_constraint("impossible".into(), vec![(theta, 1.0)], Sense::Ge, 1e12);
    let sol = solve_milp(&ir, &cfg());
    assert_eq!(sol.status, MilpStatus::Infeasible);
    assert_eq!(sol.nodes, 1);
    assert!(!sol.has_solution());
}

#[test]
fn fixed_resolve_reproduces_the_incumbent() {
    let ir = small_discrete();
    let best = solve_milp(&ir, &cfg());
    let lp = fix_integers_resolve(&ir, &best.primal, &cfg());
    assert_eq!(lp.status, LpStatus::Optimal);
    assert!((lp.objective - best.objective).abs() <= 1e-8 * best.objective.abs().max(1.0));
}

#[test]
fn fixed_resolve_without_binaries_is_plain_lp() {
    let mut ir = ModelIR::new();
    let x = ir.add_var("x".into(), 0.0, 4.0);
    let y = ir.add_var("y".into(), 0.0, 4.0);
    ir.add_constraint("c".into(), vec![(x, 1.0), (y, 2.0)], Sense::Le, 5.0);
    ir.set_objective(vec![(x, 2.0), (y, 3.0)]);
    let a = solve_lp(&ir, &cfg());
    let b = fix_integers_resolve(&ir, &a.primal, &cfg());
    assert_eq!(a.primal, b.primal);
    assert_eq!(a.duals, b.duals);
    assert_eq!(a.objective, b.objective);
}

/// Three hours, one scenario, continuous DVFS and nothing else. The cap
/// binds only at hour 2, where 1 MW more cap lets `a` rise by
/// `1 / (phi * load)`, saving `c1 / (phi * load)` of DVFS cost while paying
/// the energy price for the extra MWh.
fn binding_cap_instance() -> InstanceSpec {
    let load = vec![50.0, 70.0, 50.0];
    InstanceSpec {
        grid: TimeGrid::hourly(3),
        limits: InterconnectionLimits {
            load_cap: 66.0,
            ramp_cap: 100.0,
            initial_net_load: None,
        },
        jobs: vec![],
        dvfs: DvfsConfig {
            mode: DvfsMode::Continuous,
            levels: vec![],
            bounds: [0.8, 1.2],
            reference: 1.0,
            fixed_sensitive_fraction: 0.35,
        },
        bess: BessSpec::none(),
        bess_units: 1,
        prices: MarketPrices::flat(3, 10.0),
        weights: reference_weights(),
        scenarios: vec![Scenario::deterministic(load)],
        dc_power_cap: 200.0,
    }
}

#[test]
fn load_dual_appears_only_where_the_cap_binds() {
    let spec = binding_cap_instance();
    let ir = build_continuous_model(&spec).unwrap();
    let sol = solve_lp(&ir, &cfg());
    assert_eq!(sol.status, LpStatus::Optimal);
    let expected = 1000.0 / (0.35 * 70.0) - 10.0;
    for t in 1..=3 {
        let y = sol.duals[ir.constraint(&format!("load[1,{t}]")).unwrap()];
        if t == 2 {
            assert!((y - expected).abs() < 1e-9, "dual {y} expected {expected}");
        } else {
            assert_eq!(y, 0.0, "period {t}");
        }
    }
    let audit = common::audit_duality(&ir, &sol);
    assert!(audit.ok(1e-9), "{audit:?}");
}

#[test]
fn fractional_root_branches_to_integer_optimum() {
    // root optimum of a + b <= 1.5 is fractional
    let mut ir = ModelIR::new();
    let a = ir.add_binary("a".into());
    let b = ir.add_binary("b".into());
    ir.add_constraint("c".into(), vec![(a, 1.0), (b, 1.0)], Sense::Le, 1.5);
    ir.set_objective(vec![(a, 1.0), (b, 1.0)]);
    let sol = solve_milp(&ir, &cfg());
    assert_eq!(sol.status, MilpStatus::Optimal);
    assert_eq!(sol.objective, 1.0);
    assert_eq!(sol.gap, 0.0);
}
