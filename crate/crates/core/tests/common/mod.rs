//! Oracles and checks shared by the integration tests.
#![allow(dead_code)]

use gridforge::demo::{random_instance, RandomShape};
use gridforge::formulation::{ModelIR, Sense};
use gridforge::model::{DvfsMode, InstanceSpec};
use gridforge::solver::{solve_lp, LpSolution, LpStatus, SolverConfig};

/// Best objective over every 0/1 assignment of the integer columns, each
/// completed by an LP over the continuous columns. Assignments that break a
/// row made only of integer columns are skipped without an LP.
/// Returns `None` when no assignment is feasible.
pub fn enumerate_binaries(ir: &ModelIR, cfg: &SolverConfig) -> Option<f64> {
    let ints: Vec<usize> = (0..ir.num_vars()).filter(|&j| ir.variables[j].integer).collect();
    assert!(ints.len() <= 16, "enumeration oracle limited to 16 binaries");
    let pure_rows: Vec<usize> = (0..ir.num_constraints())
        .filter(|&i| ir.constraints[i].terms.iter().all(|&(j, _)| ir.variables[j].integer))
        .collect();
    let mut best: Option<f64> = None;
    let mut fixed = ir.clone();
    for j in &ints {
        fixed.set_integer(*j, false);
    }
    let mut x = vec![0.0; ir.num_vars()];
    for mask in 0u32..(1u32 << ints.len()) {
        for (k, &j) in ints.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            x[j] = v;
            fixed.set_bounds(j, v, v);
        }
        if pure_rows.iter().any(|&i| ir.constraints[i].violation(&x) > 1e-9) {
            continue;
        }
        let skip_bounds = ints.iter().any(|&j| x[j] < ir.variables[j].lower || x[j] > ir.variables[j].upper);
        if skip_bounds {
            continue;
        }
        let sol = solve_lp(&fixed, cfg);
        if sol.status == LpStatus::Optimal {
            best = Some(best.map_or(sol.objective, |b: f64| b.max(sol.objective)));
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub struct DualityCheck {
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Relative primal-dual objective gap.
    pub gap: f64,
    /// Largest complementary-slackness product, relative to `max(1, |obj|)`.
    pub cs: f64,
    /// Largest sign-convention breach of a row dual or reduced cost.
    pub sign: f64,
    /// Largest mismatch between reported reduced costs and `c - A'y`.
    pub rc_mismatch: f64,
}

impl DualityCheck {
    pub fn ok(&self, tol: f64) -> bool {
        self.gap <= tol && self.cs <= tol && self.sign <= tol && self.rc_mismatch <= tol
    }
}

/// Independent duality audit of an optimal LP solution of `ir` (maximize).
/// The dual objective is assembled from right-hand sides and finite bounds.
pub fn audit_duality(ir: &ModelIR, sol: &LpSolution) -> DualityCheck {
    let x = &sol.primal;
    let y = &sol.duals;
    let n = ir.num_vars();
    let mut c = vec![0.0; n];
    for &(j, a) in &ir.objective {
        c[j] += a;
    }
    let primal_obj: f64 = (0..n).map(|j| c[j] * x[j]).sum();
    let scale = primal_obj.abs().max(1.0);

    let mut aty = vec![0.0; n];
    let mut dual_obj = 0.0;
    let mut cs: f64 = 0.0;
    let mut sign: f64 = 0.0;
    for (i, row) in ir.constraints.iter().enumerate() {
        for &(j, a) in &row.terms {
            aty[j] += a * y[i];
        }
        dual_obj += y[i] * row.rhs;
        let slack = row.rhs - row.activity(x);
        cs = cs.max((y[i] * slack).abs() / scale);
        let breach = match row.sense {
            Sense::Le => (-y[i]).max(0.0),
            Sense::Ge => y[i].max(0.0),
            Sense::Eq => 0.0,
        };
        sign = sign.max(breach);
    }
    let mut rc_mismatch: f64 = 0.0;
    for j in 0..n {
        let d = c[j] - aty[j];
        rc_mismatch = rc_mismatch.max((d - sol.reduced_costs[j]).abs() / d.abs().max(1.0));
        let v = &ir.variables[j];
        // For a maximization, d > 0 prices the upper bound and d < 0 the lower.
        let bound = if d > 0.0 { v.upper } else { v.lower };
        if d.abs() <= 1e-9 {
            dual_obj += d * x[j];
            continue;
        }
        if !bound.is_finite() {
            sign = sign.max(d.abs());
            continue;
        }
        dual_obj += d * bound;
        cs = cs.max((d * (x[j] - bound)).abs() / scale);
    }
    DualityCheck {
        primal_obj,
        dual_obj,
        gap: (primal_obj - dual_obj).abs() / scale,
        cs,
        sign,
        rc_mismatch,
    }
}

/// Shapes used by the enumeration criterion, all with at most 12 binaries.
pub fn oracle_shape(k: u64) -> RandomShape {
    let shapes = [
        (3, 2, true),
        (4, 1, true),
        (4, 2, false),
        (2, 2, true),
        (3, 1, true),
    ];
    let (periods, levels, bess) = shapes[(k % shapes.len() as u64) as usize];
    RandomShape {
        periods,
        jobs: 1 + (k % 2) as usize,
        scenarios: 1 + (k % 3) as usize,
        mode: DvfsMode::Discrete,
        levels,
        bess,
    }
}

pub fn small_discrete(seed: u64) -> InstanceSpec {
    random_instance(seed, oracle_shape(seed))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
