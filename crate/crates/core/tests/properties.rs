//! Randomized invariants across the model, generator, builders and solver.

mod common;

use common::{audit_duality, rel, small_discrete};
use gridforge::analytics::throughput_efc;
use gridforge::demo::{random_instance, RandomShape};
use gridforge::formulation::{build_discrete_model, scenario_profit, ModelIR, Sense};
use gridforge::model::{
    conservative_fixed_load, flexible_headroom, load_job_portfolio, write_job_portfolio, DvfsConfig, DvfsMode,
    JobSpec, Scenario,
};
use gridforge::scenario::{build_envelope, generate_scenarios, GeneratorConfig};
use gridforge::solver::{solve_lp, solve_milp, LpStatus, MilpStatus, SolverConfig};
use gridforge::{solve_instance, SolveStatus};
use proptest::prelude::*;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn scenario_one(load: f64, env: f64) -> Scenario {
    let mut s = Scenario::deterministic(vec![load]);
    s.fixed_envelope = vec![env];
    s
}

fn continuous(phi: f64) -> DvfsConfig {
    DvfsConfig {
        mode: DvfsMode::Continuous,
        levels: vec![],
        bounds: [0.8, 1.2],
        reference: 1.0,
        fixed_sensitive_fraction: phi,
    }
}

// ---- vertex enumeration oracle for tiny LPs ----

/// Solve the square system `m x = b` by Gaussian elimination with partial
/// pivoting; `None` if singular.
fn solve_square(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &k| m[i][c].abs().total_cmp(&m[k][c].abs()))?;
        if m[p][c].abs() < 1e-10 {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / m[i][i]).collect())
}

/// Best objective over all vertices of a bounded LP: every choice of `n`
/// hyperplanes among rows and variable bounds.
fn vertex_optimum(ir: &ModelIR) -> Option<f64> {
    let n = ir.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &ir.constraints {
        let mut a = vec![0.0; n];
        for &(j, v) in &c.terms {
            a[j] += v;
        }
        planes.push((a, c.rhs));
    }
    for (j, v) in ir.variables.iter().enumerate() {
        for b in [v.lower, v.upper] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            planes.push((a, b));
        }
    }
    let k = planes.len();
    let mut best: Option<f64> = None;
    let mut pick = (0..n).collect::<Vec<_>>();
    loop {
        let m = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let b = pick.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(m, b) {
            let feasible = ir.max_violation(&x) <= 1e-7;
            if feasible {
                let z = ir.objective_value(&x);
                best = Some(best.map_or(z, |v: f64| v.max(z)));
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < k - n + i {
                break;
            }
        }
        pick[i] += 1;
        for q in i + 1..n {
            pick[q] = pick[q - 1] + 1;
        }
    }
}

fn sense_of(k: u8) -> Sense {
    match k % 3 {
        0 => Sense::Le,
        1 => Sense::Ge,
        _ => Sense::Eq,
    }
}

prop_compose! {
    fn tiny_lp()(n in 2usize..=3, m in 1usize..=3)
        (ub in prop::collection::vec(1.0f64..10.0, n),
         c in prop::collection::vec(-5.0f64..5.0, n),
         rows in prop::collection::vec((prop::collection::vec(-5.0f64..5.0, n), any::<u8>(), -5.0f64..12.0), m))
        -> ModelIR
    {
        let mut ir = ModelIR::new();
        let vars: Vec<usize> = ub.iter().enumerate().map(|(j, &u)| ir.add_var(format!("x{j}"), 0.0, u)).collect();
        for (i, (a, s, b)) in rows.into_iter().enumerate() {
            let terms = vars.iter().zip(a).map(|(&j, v)| (j, v)).collect();
            ir.add_constraint(format!("r{i}"), terms, sense_of(s), b);
        }
        ir.set_objective(vars.iter().zip(c).map(|(&j, v)| (j, v)).collect());
        ir
    }
}

fn shape(periods: usize, jobs: usize, scenarios: usize, mode: DvfsMode, levels: usize, bess: bool) -> RandomShape {
    RandomShape {
        periods,
        jobs,
        scenarios,
        mode,
        levels,
        bess,
    }
}

fn scale_economics(spec: &mut gridforge::model::InstanceSpec, g: f64) {
    let p = &mut spec.prices;
    for s in [&mut p.energy, &mut p.reserve, &mut p.frp_up, &mut p.frp_down] {
        s.iter_mut().for_each(|x| *x *= g);
    }
    spec.weights.c_dvfs *= g;
    spec.weights.c_unfinished *= g;
    spec.weights.c_tardy *= g;
    spec.bess.degradation_cost *= g;
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conservative_load_is_affine_in_a(env in 50.0f64..120.0, gap in 0.0f64..20.0, phi in 0.01f64..0.99,
                                        a in 0.8f64..1.19) {
        let dv = continuous(phi);
        let s = scenario_one(env - gap, env);
        let h = 1e-3;
        let f0 = conservative_fixed_load(&s, 1, a, &dv).unwrap();
        let f1 = conservative_fixed_load(&s, 1, a + h, &dv).unwrap();
        let slope = phi * (env - gap) / dv.reference;
        prop_assert!(rel((f1 - f0) / h, slope) <= 1e-9, "fd {} vs {}", (f1 - f0) / h, slope);
    }

    #[test]
    fn headroom_is_non_increasing_in_a(env in 50.0f64..90.0, phi in 0.01f64..0.99,
                                       a in 0.8f64..1.2, b in 0.8f64..1.2) {
        let mut spec = random_instance(1, shape(1, 0, 1, DvfsMode::Continuous, 0, false));
        spec.dvfs = continuous(phi);
        let s = scenario_one(env * 0.9, env);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let h_lo = flexible_headroom(&spec, &s, 1, lo).unwrap();
        let h_hi = flexible_headroom(&spec, &s, 1, hi).unwrap();
        prop_assert!(h_hi <= h_lo + 1e-12);
    }

    #[test]
    fn portfolio_round_trips_through_csv(rows in prop::collection::vec(
        ("[a-z_]{1,12}", 1usize..24, 0usize..24, 0.0f64..200.0, 0.1f64..20.0, 0.0f64..3.0), 0..10)) {
        let jobs: Vec<JobSpec> = rows
            .into_iter()
            .map(|(id, release, extra, work, max_rate, weight)| JobSpec {
                id,
                release,
                deadline: release + extra,
                work,
                max_rate,
                weight,
            })
            .collect();
        let mut buf = Vec::new();
        write_job_portfolio(&jobs, &mut buf).unwrap();
        let back = load_job_portfolio(buf.as_slice()).unwrap();
        prop_assert_eq!(back, jobs);
    }

    #[test]
    fn envelope_dominates_every_scenario(loads in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 4), 1..6),
                                         eps in 0.0f64..0.05, cap in 50.0f64..200.0) {
        let scen: Vec<Scenario> = loads.into_iter().map(Scenario::deterministic).collect();
        let out = build_envelope(scen.clone(), eps, cap).unwrap();
        for s in &out {
            for t in 0..4 {
                prop_assert!(s.fixed_envelope[t] >= s.fixed_load[t]);
                let max = scen.iter().map(|x| x.fixed_load[t]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(s.fixed_envelope[t], max + eps * cap);
            }
        }
    }

    #[test]
    fn generator_is_pure_and_bounded(seed in any::<u64>(), count in 1usize..8, noise in 0.0f64..0.5,
                                     base in prop::collection::vec(0.0f64..80.0, 1..8),
                                     means in (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0)) {
        let mut g = GeneratorConfig::new(seed, count, base.clone());
        g.load_noise_rel = noise;
        g.deploy_mean_reserve = means.0;
        g.deploy_mean_frp_up = means.1;
        g.deploy_mean_frp_down = means.2;
        let grid = gridforge::model::TimeGrid::hourly(base.len());
        let a = generate_scenarios(&g, &grid, 100.0).unwrap();
        let b = generate_scenarios(&g, &grid, 100.0).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), count);
        for s in &a {
            for d in [&s.deploy_reserve, &s.deploy_frp_up, &s.deploy_frp_down] {
                prop_assert!(d.iter().all(|x| (0.0..=1.0).contains(x)));
            }
            prop_assert!(s.fixed_load.iter().all(|&x| x >= 0.0));
            prop_assert!(s.fixed_envelope.iter().zip(&s.fixed_load).all(|(e, l)| e >= l));
        }
    }

    #[test]
    fn lp_matches_vertex_enumeration(ir in tiny_lp()) {
        let sol = solve_lp(&ir, &cfg());
        match vertex_optimum(&ir) {
            Some(z) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!(rel(sol.objective, z) <= 1e-6, "simplex {} vs vertices {}", sol.objective, z);
                prop_assert!(ir.max_violation(&sol.primal) <= 1e-7);
            }
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn lp_duals_certify_optimality(ir in tiny_lp()) {
        let sol = solve_lp(&ir, &cfg());
        prop_assume!(sol.status == LpStatus::Optimal);
        let a = audit_duality(&ir, &sol);
        prop_assert!(a.ok(1e-6), "{:?}", a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn model_level_duality_holds(seed in 0u64..10_000, bess in any::<bool>(), cont in any::<bool>()) {
        let mode = if cont { DvfsMode::Continuous } else { DvfsMode::Disabled };
        let spec = random_instance(seed, shape(3, 2, 2, mode, 0, bess));
        let ir = gridforge::formulation::build_continuous_model(&spec).unwrap();
        let sol = solve_lp(&ir, &cfg());
        prop_assume!(sol.status == LpStatus::Optimal);
        let a = audit_duality(&ir, &sol);
        prop_assert!(a.ok(1e-6), "{:?}", a);
    }

    #[test]
    fn robust_objective_is_the_worst_scenario(seed in 0u64..10_000, discrete in any::<bool>()) {
        let mode = if discrete { DvfsMode::Discrete } else { DvfsMode::Continuous };
        let spec = random_instance(seed, shape(3, 2, 3, mode, 2, true));
        let out = solve_instance(&spec, &cfg()).unwrap();
        prop_assume!(out.report.status == SolveStatus::Optimal);
        let sched = out.schedule.as_ref().unwrap();
        let worst = spec
            .scenarios
            .iter()
            .map(|s| scenario_profit(sched, s, &spec).unwrap().profit)
            .fold(f64::INFINITY, f64::min);
        let theta = out.primal[out.model.var("theta").unwrap()];
        let unit = spec.prices.energy.iter().fold(1.0f64, |m, p| m.max(p.abs()));
        prop_assert!((theta - worst).abs() / unit <= 1e-6, "theta {} vs {}", theta, worst);
    }

    #[test]
    fn work_is_conserved(seed in 0u64..10_000, discrete in any::<bool>()) {
        let mode = if discrete { DvfsMode::Discrete } else { DvfsMode::Continuous };
        let spec = random_instance(seed, shape(4, 2, 2, mode, 2, seed % 2 == 0));
        let out = solve_instance(&spec, &cfg()).unwrap();
        prop_assume!(out.report.status == SolveStatus::Optimal);
        let s = out.schedule.unwrap();
        let dt = spec.dt();
        for (jx, job) in spec.jobs.iter().enumerate() {
            let served: f64 = s.effective_rates[jx].iter().sum::<f64>() * dt;
            prop_assert!(served + s.unfinished[jx] >= job.work - 1e-6);
            prop_assert!(served <= job.work + 1e-6);
            for t in 0..spec.periods() {
                prop_assert!(s.job_rates[jx][t] >= -1e-9 && s.job_rates[jx][t] <= job.max_rate + 1e-6);
                if t + 1 < job.release {
                    prop_assert!(s.job_rates[jx][t].abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn milp_incumbents_are_exact(seed in 0u64..10_000) {
        let spec = small_discrete(seed);
        let ir = build_discrete_model(&spec).unwrap();
        let sol = solve_milp(&ir, &cfg());
        prop_assume!(sol.has_solution());
        prop_assert!(ir.max_violation(&sol.primal) <= 1e-7);
        for j in 0..ir.num_vars() {
            if ir.variables[j].integer {
                prop_assert!(sol.primal[j] == 0.0 || sol.primal[j] == 1.0);
            }
        }
        for t in 1..=spec.periods() {
            if let (Some(c), Some(d)) = (ir.var(&format!("mode_ch[{t}]")), ir.var(&format!("mode_dis[{t}]"))) {
                prop_assert!(sol.primal[c] + sol.primal[d] <= 1.0);
            }
        }
        prop_assert!(sol.bound >= sol.objective);
        prop_assert_eq!(sol.gap, (sol.bound - sol.objective) / sol.objective.abs().max(1.0));
    }

    #[test]
    fn solves_are_deterministic(seed in 0u64..10_000) {
        let ir = build_discrete_model(&small_discrete(seed)).unwrap();
        let a = solve_milp(&ir, &cfg());
        let b = solve_milp(&ir, &cfg());
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.nodes, b.nodes);
        prop_assert_eq!(a.lp_iterations, b.lp_iterations);
        prop_assert!(a.objective == b.objective || (a.objective.is_nan() && b.objective.is_nan()));
        prop_assert_eq!(a.primal, b.primal);
    }

    #[test]
    fn scaling_economics_scales_the_optimum(seed in 0u64..10_000, g in 0.1f64..10.0, discrete in any::<bool>()) {
        let mode = if discrete { DvfsMode::Discrete } else { DvfsMode::Continuous };
        let spec = random_instance(seed, shape(3, 2, 2, mode, 2, true));
        let base = solve_instance(&spec, &cfg()).unwrap();
        prop_assume!(base.report.status == SolveStatus::Optimal);
        let mut scaled = spec.clone();
        scale_economics(&mut scaled, g);
        let out = solve_instance(&scaled, &cfg()).unwrap();
        prop_assert_eq!(out.report.status, SolveStatus::Optimal);
        let z0 = base.report.objective.unwrap();
        let z1 = out.report.objective.unwrap();
        prop_assert!(rel(z1, g * z0) <= 1e-6, "{} vs {}", z1, g * z0);
        // the original schedule stays optimal under scaled prices
        let sched = base.schedule.unwrap();
        let worst = scaled
            .scenarios
            .iter()
            .map(|s| scenario_profit(&sched, s, &scaled).unwrap().profit)
            .fold(f64::INFINITY, f64::min);
        prop_assert!(rel(worst, z1) <= 1e-6, "{} vs {}", worst, z1);
    }

    #[test]
    fn no_cycle_slack_means_efc_within_budget(seed in 0u64..10_000, budget in 0.05f64..1.5) {
        let mut spec = random_instance(seed, shape(4, 1, 2, DvfsMode::Discrete, 2, true));
        spec.bess.cycle_budget = budget;
        let out = solve_instance(&spec, &cfg()).unwrap();
        prop_assume!(out.report.status == SolveStatus::Optimal);
        let sched = out.schedule.unwrap();
        for (k, s) in spec.scenarios.iter().enumerate() {
            let slack = out.primal[out.model.var(&format!("ellc[{}]", k + 1)).unwrap()];
            if slack <= 1e-9 {
                let (_, efc) = throughput_efc(&sched, s, spec.fleet_energy_cap(), spec.dt()).unwrap();
                prop_assert!(efc <= budget + 1e-7, "efc {} budget {}", efc, budget);
            }
        }
    }

    #[test]
    fn refining_levels_never_hurts(seed in 0u64..10_000) {
        let mut prev = f64::NEG_INFINITY;
        for levels in 1..=3 {
            let spec = random_instance(seed, shape(3, 1, 2, DvfsMode::Discrete, levels, false));
            let sol = solve_milp(&build_discrete_model(&spec).unwrap(), &cfg());
            let z = if sol.status == MilpStatus::Optimal { sol.objective } else { f64::NEG_INFINITY };
            prop_assert!(sol.status == MilpStatus::Optimal || sol.status == MilpStatus::Infeasible);
            prop_assert!(z >= prev - 1e-6 * prev.abs().max(1.0), "levels {} {} < {}", levels, z, prev);
            prev = z;
        }
    }
}
