//! End-to-end solve: validate, build the deterministic equivalent, solve,
//! extract and price the schedule, replay it in-sample.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::replay;
use crate::formulation::{build_model, extract_schedule, profit_breakdown, ModelIR, ProfitBreakdown, Schedule};
use crate::model::{validate_instance, DvfsMode, InstanceSpec};
use crate::solver::{fix_integers_resolve, solve_lp, LpSolution, LpStatus, MilpStatus, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    GapLimit,
    NodeLimit,
    TimeLimit,
    IterationLimit,
    Infeasible,
    Unbounded,
    NumericFailure,
}

impl SolveStatus {
    /// Process exit code: 0 optimal, 2 infeasible, 3 any limit, 1 otherwise.
    pub fn exit_code(self) -> i32 {
        match self {
            SolveStatus::Optimal => 0,
            SolveStatus::Infeasible => 2,
            SolveStatus::GapLimit | SolveStatus::NodeLimit | SolveStatus::TimeLimit | SolveStatus::IterationLimit => 3,
            SolveStatus::Unbounded | SolveStatus::NumericFailure => 1,
        }
    }

    fn from_lp(s: LpStatus) -> Self {
        match s {
            LpStatus::Optimal => SolveStatus::Optimal,
            LpStatus::Infeasible => SolveStatus::Infeasible,
            LpStatus::Unbounded => SolveStatus::Unbounded,
            LpStatus::NumericFailure => SolveStatus::NumericFailure,
            LpStatus::IterationLimit => SolveStatus::IterationLimit,
        }
    }

    fn from_milp(s: MilpStatus) -> Self {
        match s {
            MilpStatus::Optimal => SolveStatus::Optimal,
            MilpStatus::Infeasible => SolveStatus::Infeasible,
            MilpStatus::GapLimit => SolveStatus::GapLimit,
            MilpStatus::NodeLimit => SolveStatus::NodeLimit,
            MilpStatus::TimeLimit => SolveStatus::TimeLimit,
            MilpStatus::Unbounded => SolveStatus::Unbounded,
            MilpStatus::NumericFailure => SolveStatus::NumericFailure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSize {
    pub variables: usize,
    pub constraints: usize,
    pub binaries: usize,
}

/// Machine-readable outcome of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub mode: DvfsMode,
    /// Worst-case profit `theta` of the returned schedule.
    pub objective: Option<f64>,
    /// Proven upper bound on the worst-case profit.
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub elapsed_s: f64,
    /// The final LP basis had a basic variable at a bound.
    pub degenerate: bool,
    pub model: ModelSize,
    pub breakdown: Option<ProfitBreakdown>,
    /// Load, ramp and SOC breaches found replaying against the training set.
    pub in_sample_violations: usize,
}

/// A solved instance: report, schedule, and the model with its primal point.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub schedule: Option<Schedule>,
    pub model: ModelIR,
    pub primal: Vec<f64>,
    lp: Option<LpSolution>,
}

impl SolveOutcome {
    /// Shadow prices of the solution. LP models return their own duals;
    /// MILP incumbents are re-solved with integers fixed. Gap-limited or
    /// otherwise unproven incumbents are refused.
    pub fn shadow_prices(&self, cfg: &SolverConfig) -> Result<LpSolution> {
        if self.report.status != SolveStatus::Optimal {
            return Err(Error::domain(format!(
                "no duals for a {:?} solution; only optimal solutions yield shadow prices",
                self.report.status
            )));
        }
        if let Some(lp) = &self.lp {
            return Ok(lp.clone());
        }
        let fixed = fix_integers_resolve(&self.model, &self.primal, cfg);
        if fixed.status != LpStatus::Optimal {
            return Err(Error::Internal(format!(
                "fixed-integer re-solve returned {:?} for a feasible incumbent",
                fixed.status
            )));
        }
        Ok(fixed)
    }
}

/// Validate, build, solve and price `spec`.
pub fn solve_instance(spec: &InstanceSpec, cfg: &SolverConfig) -> Result<SolveOutcome> {
    validate_instance(spec).map_err(Error::Invalid)?;
    let model = build_model(spec)?;
    let size = ModelSize {
        variables: model.num_vars(),
        constraints: model.num_constraints(),
        binaries: model.num_integer(),
    };
    debug!(
        "built model: {} variables, {} rows, {} binaries",
        size.variables, size.constraints, size.binaries
    );

    let (status, primal, objective, bound, gap, nodes, iters, elapsed, degenerate, lp) = if size.binaries > 0 {
        let sol = crate::solver::solve_milp(&model, cfg);
        let has = sol.has_solution();
        (
            SolveStatus::from_milp(sol.status),
            sol.primal,
            has.then_some(sol.objective),
            sol.bound.is_finite().then_some(sol.bound),
            has.then_some(sol.gap),
            sol.nodes,
            sol.lp_iterations,
            sol.elapsed_s,
            false,
            None,
        )
    } else {
        let start = std::time::Instant::now();
        let sol = solve_lp(&model, cfg);
        let ok = sol.status == LpStatus::Optimal;
        (
            SolveStatus::from_lp(sol.status),
            sol.primal.clone(),
            ok.then_some(sol.objective),
            ok.then_some(sol.objective),
            ok.then_some(0.0),
            1,
            sol.iterations,
            start.elapsed().as_secs_f64(),
            sol.degenerate,
            ok.then_some(sol),
        )
    };

    let mut report = SolveReport {
        status,
        mode: spec.dvfs.mode,
        objective,
        bound,
        gap,
        nodes,
        lp_iterations: iters,
        elapsed_s: elapsed,
        degenerate,
        model: size,
        breakdown: None,
        in_sample_violations: 0,
    };
    let schedule = if primal.is_empty() {
        None
    } else {
        let schedule = extract_schedule(&model, &primal, spec)?;
        report.breakdown = Some(profit_breakdown(&schedule, spec)?);
        for (s, scenario) in spec.scenarios.iter().enumerate() {
            let n = replay(&schedule, scenario, spec)?.violations.len();
            if n > 0 {
                warn!("schedule breaches {n} limits in training scenario {}", s + 1);
            }
            report.in_sample_violations += n;
        }
        Some(schedule)
    };
    Ok(SolveOutcome {
        report,
        schedule,
        model,
        primal,
        lp,
    })
}
