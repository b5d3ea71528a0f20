//! Embedded LP and MILP solvers.
//!
//! [`solve_lp`] ignores integrality. [`solve_milp`] runs best-bound branch and
//! bound on the binaries with warm-started node relaxations.

mod lu;
mod milp;
mod simplex;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::formulation::ModelIR;

pub use milp::{fix_integers_resolve, solve_milp, MilpSolution, MilpStatus};

use simplex::{RawStatus, ScaledLp, Simplex};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverConfig {
    /// Primal feasibility tolerance (scaled units).
    pub feas_tol: f64,
    /// Dual feasibility tolerance used by pricing.
    pub opt_tol: f64,
    /// Bound relaxation of the two-pass ratio test.
    pub harris_tol: f64,
    /// Relative optimality gap at which branch and bound stops.
    pub gap_tol: f64,
    pub node_limit: usize,
    pub time_limit_s: f64,
    /// Simplex iteration cap per LP solve.
    pub max_lp_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-7,
            opt_tol: 1e-9,
            harris_tol: 1e-9,
            gap_tol: 1e-6,
            node_limit: 200_000,
            time_limit_s: 300.0,
            max_lp_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericFailure,
    IterationLimit,
}

/// Result of an LP solve. Duals follow the maximization convention: the dual
/// of a row is the rate of change of the optimum with respect to its rhs, so
/// binding `<=` rows have nonnegative duals and binding `>=` rows nonpositive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Basic columns; index `n + i` denotes the logical of row `i`.
    pub basis: Vec<usize>,
    pub degenerate: bool,
    pub iterations: usize,
}

impl LpSolution {
    fn empty(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            primal: Vec::new(),
            objective: f64::NAN,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            basis: Vec::new(),
            degenerate: false,
            iterations,
        }
    }
}

/// Solve the continuous relaxation of `ir` (integrality flags are ignored).
pub fn solve_lp(ir: &ModelIR, cfg: &SolverConfig) -> LpSolution {
    let lp = ScaledLp::from_ir(ir);
    let mut eng = Simplex::new(&lp, cfg);
    let deadline = Instant::now() + std::time::Duration::from_secs_f64(cfg.time_limit_s.max(0.0));
    let raw = eng.solve(cfg.max_lp_iterations, Some(deadline));
    finish_lp(ir, &mut eng, raw)
}

fn map_status(raw: RawStatus) -> LpStatus {
    match raw {
        RawStatus::Optimal => LpStatus::Optimal,
        RawStatus::Infeasible => LpStatus::Infeasible,
        RawStatus::Unbounded => LpStatus::Unbounded,
        RawStatus::NumericFailure => LpStatus::NumericFailure,
        RawStatus::IterationLimit | RawStatus::TimeLimit => LpStatus::IterationLimit,
    }
}

pub(crate) fn primal_unscaled(eng: &Simplex<'_>) -> Vec<f64> {
    let lp = eng.lp();
    (0..lp.n).map(|j| eng.x[j] * lp.col_scale[j]).collect()
}

fn finish_lp(ir: &ModelIR, eng: &mut Simplex<'_>, raw: RawStatus) -> LpSolution {
    let status = map_status(raw);
    if status != LpStatus::Optimal {
        return LpSolution::empty(status, eng.iterations);
    }
    if !eng.polish() {
        return LpSolution::empty(LpStatus::NumericFailure, eng.iterations);
    }
    let lp = eng.lp();
    let (n, m) = (lp.n, lp.m);
    let sigma = lp.obj_scale;
    let primal = primal_unscaled(eng);
    let y = eng.phase2_duals();
    let duals = (0..m).map(|i| -lp.row_scale[i] * y[i] / sigma).collect();
    let reduced_costs = (0..n)
        .map(|j| -eng.reduced_cost(j, &y, false) / (sigma * lp.col_scale[j]))
        .collect();
    LpSolution {
        status,
        objective: ir.objective_value(&primal),
        primal,
        duals,
        reduced_costs,
        basis: eng.basis.clone(),
        degenerate: eng.degenerate(),
        iterations: eng.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{ModelIR, Sense};

    fn two_var() -> ModelIR {
        // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 7, x <= 3
        let mut ir = ModelIR::new();
        let x = ir.add_var("x".into(), 0.0, 3.0);
        let y = ir.add_var("y".into(), 0.0, f64::INFINITY);
        ir.add_constraint("c1".into(), vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        ir.add_constraint("c2".into(), vec![(x, 1.0), (y, 3.0)], Sense::Le, 7.0);
        ir.set_objective(vec![(x, 3.0), (y, 2.0)]);
        ir
    }

    #[test]
    fn solves_small_lp_with_duals() {
        let sol = solve_lp(&two_var(), &SolverConfig::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 11.0).abs() < 1e-9);
        assert!((sol.primal[0] - 3.0).abs() < 1e-9);
        assert!((sol.primal[1] - 1.0).abs() < 1e-9);
        // c1 binding with dual 2, c2 slack
        assert!((sol.duals[0] - 2.0).abs() < 1e-9);
        assert!(sol.duals[1].abs() < 1e-9);
        // x at its upper bound earns 3 - 2
        assert!((sol.reduced_costs[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut ir = ModelIR::new();
        let x = ir.add_var("x".into(), 0.0, f64::INFINITY);
        ir.add_constraint("a".into(), vec![(x, 1.0)], Sense::Ge, 2.0);
        ir.add_constraint("b".into(), vec![(x, 1.0)], Sense::Le, 1.0);
        assert_eq!(solve_lp(&ir, &SolverConfig::default()).status, LpStatus::Infeasible);

        let mut ir = ModelIR::new();
        let x = ir.add_var("x".into(), 0.0, f64::INFINITY);
        let y = ir.add_var("y".into(), f64::NEG_INFINITY, f64::INFINITY);
        ir.add_constraint("a".into(), vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        ir.set_objective(vec![(x, 1.0)]);
        assert_eq!(solve_lp(&ir, &SolverConfig::default()).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // max -|t| style: max -u  s.t. u >= x - 2, u >= 2 - x, x + y = 5, y in [0,1]
        let mut ir = ModelIR::new();
        let x = ir.add_var("x".into(), f64::NEG_INFINITY, f64::INFINITY);
        let y = ir.add_var("y".into(), 0.0, 1.0);
        let u = ir.add_var("u".into(), 0.0, f64::INFINITY);
        ir.add_constraint("p".into(), vec![(u, 1.0), (x, -1.0)], Sense::Ge, -2.0);
        ir.add_constraint("n".into(), vec![(u, 1.0), (x, 1.0)], Sense::Ge, 2.0);
        ir.add_constraint("e".into(), vec![(x, 1.0), (y, 1.0)], Sense::Eq, 5.0);
        ir.set_objective(vec![(u, -1.0)]);
        let sol = solve_lp(&ir, &SolverConfig::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 2.0).abs() < 1e-9, "{}", sol.objective);
        assert!((sol.primal[0] - 4.0).abs() < 1e-9);
    }
}
