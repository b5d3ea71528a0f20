//! Best-bound branch and bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::simplex::{BasisSnapshot, RawStatus, ScaledLp, Simplex};
use super::{primal_unscaled, solve_lp, LpSolution, SolverConfig};
use crate::formulation::ModelIR;

const INT_TOL: f64 = 1e-6;
/// Gap at which a search is reported as proven optimal.
const OPTIMAL_GAP: f64 = 1e-6;
/// Beyond this many open nodes, children stop carrying a warm-start basis.
const SNAPSHOT_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    /// Stopped at a configured gap tolerance looser than the optimality gap.
    GapLimit,
    NodeLimit,
    TimeLimit,
    Unbounded,
    NumericFailure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Best integer-feasible point found (empty if none).
    pub primal: Vec<f64>,
    pub objective: f64,
    /// Best proven upper bound on the optimum.
    pub bound: f64,
    /// `(bound - objective) / max(1, |objective|)`.
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub elapsed_s: f64,
}

impl MilpSolution {
    pub fn has_solution(&self) -> bool {
        !self.primal.is_empty()
    }
}

struct Node {
    bound: f64,
    id: usize,
    fixes: Vec<(u32, bool)>,
    basis: Option<Rc<BasisSnapshot>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn gap(bound: f64, obj: f64) -> f64 {
    ((bound - obj) / obj.abs().max(1.0)).max(0.0)
}

struct Search<'a> {
    ir: &'a ModelIR,
    cfg: &'a SolverConfig,
    ints: Vec<usize>,
    deadline: Instant,
    incumbent: Option<(f64, Vec<f64>)>,
    numeric_trouble: bool,
}

impl<'a> Search<'a> {
    fn apply_fixes(&self, eng: &mut Simplex<'_>, fixes: &[(u32, bool)]) {
        eng.reset_bounds();
        for &(j, one) in fixes {
            let v = if one { 1.0 } else { 0.0 };
            eng.set_bounds(j as usize, v, v);
        }
    }

    fn solve_node(&mut self, eng: &mut Simplex<'_>) -> RawStatus {
        let raw = eng.solve(self.cfg.max_lp_iterations, Some(self.deadline));
        if raw == RawStatus::NumericFailure {
            // retry from a slack basis
            let fresh = Simplex::new(eng.lp(), self.cfg);
            eng.restore(&fresh.snapshot());
            let raw = eng.solve(self.cfg.max_lp_iterations, Some(self.deadline));
            if raw == RawStatus::NumericFailure {
                self.numeric_trouble = true;
            }
            return raw;
        }
        raw
    }

    /// Fix binaries of `x` to their rounded values and re-solve; updates the
    /// incumbent when the completion is feasible and improving.
    fn try_completion(&mut self, eng: &mut Simplex<'_>, x: &[f64], base: &[(u32, bool)]) {
        let snap = eng.snapshot();
        let mut fixes: Vec<(u32, bool)> = base.to_vec();
        for &j in &self.ints {
            if !base.iter().any(|f| f.0 as usize == j) {
                fixes.push((j as u32, x[j] >= 0.5));
            }
        }
        self.apply_fixes(eng, &fixes);
        let raw = self.solve_node(eng);
        if raw == RawStatus::Optimal && eng.polish() {
            let mut xs = primal_unscaled(eng);
            for &(j, one) in &fixes {
                xs[j as usize] = if one { 1.0 } else { 0.0 };
            }
            let obj = self.ir.objective_value(&xs);
            if self.incumbent.as_ref().is_none_or(|(best, _)| obj > *best) {
                log::debug!("incumbent {obj:.6}");
                self.incumbent = Some((obj, xs));
            }
        }
        eng.restore(&snap);
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best = None;
        let mut best_score = INT_TOL;
        for &j in &self.ints {
            let f = x[j] - x[j].floor();
            let score = f.min(1.0 - f);
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        best
    }

    fn can_prune(&self, bound: f64) -> bool {
        match &self.incumbent {
            Some((inc, _)) => gap(bound, *inc) <= self.cfg.gap_tol.max(OPTIMAL_GAP) * 0.999 || bound <= *inc,
            None => false,
        }
    }
}

/// Solve `ir` to (near) optimality over its integer variables, all of which
/// must be binary.
pub fn solve_milp(ir: &ModelIR, cfg: &SolverConfig) -> MilpSolution {
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(cfg.time_limit_s.max(0.0));
    let lp = ScaledLp::from_ir(ir);
    let mut eng = Simplex::new(&lp, cfg);
    let ints: Vec<usize> = (0..ir.num_vars()).filter(|&j| ir.variables[j].integer).collect();
    let mut s = Search {
        ir,
        cfg,
        ints,
        deadline,
        incumbent: None,
        numeric_trouble: false,
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::INFINITY,
        id: 0,
        fixes: Vec::new(),
        basis: None,
    });
    let mut next_id = 1usize;
    let mut nodes = 0usize;
    let mut stop: Option<MilpStatus> = None;
    let mut root_unbounded = false;

    while let Some(node) = heap.pop() {
        if s.can_prune(node.bound) {
            continue;
        }
        if nodes >= cfg.node_limit {
            heap.push(node);
            stop = Some(MilpStatus::NodeLimit);
            break;
        }
        if Instant::now() >= deadline {
            heap.push(node);
            stop = Some(MilpStatus::TimeLimit);
            break;
        }
        nodes += 1;
        if let Some(b) = &node.basis {
            eng.restore(b);
        }
        s.apply_fixes(&mut eng, &node.fixes);
        let raw = s.solve_node(&mut eng);
        match raw {
            RawStatus::Optimal => {}
            RawStatus::Infeasible | RawStatus::NumericFailure => continue,
            RawStatus::Unbounded => {
                if nodes == 1 {
                    root_unbounded = true;
                    break;
                }
                continue;
            }
            RawStatus::TimeLimit | RawStatus::IterationLimit => {
                heap.push(node);
                stop = Some(MilpStatus::TimeLimit);
                break;
            }
        }
        let x = primal_unscaled(&eng);
        let obj = ir.objective_value(&x);
        let bound = obj.min(node.bound);
        if s.can_prune(bound) {
            continue;
        }
        match s.most_fractional(&x) {
            None => s.try_completion(&mut eng, &x, &node.fixes),
            Some(j) => {
                if nodes == 1 {
                    s.try_completion(&mut eng, &x, &node.fixes);
                }
                let snap = if heap.len() < SNAPSHOT_CAP {
                    Some(Rc::new(eng.snapshot()))
                } else {
                    None
                };
                for (k, one) in [true, false].into_iter().enumerate() {
                    let mut fixes = node.fixes.clone();
                    fixes.push((j as u32, one));
                    heap.push(Node {
                        bound,
                        id: next_id + k,
                        fixes,
                        basis: snap.clone(),
                    });
                }
                next_id += 2;
            }
        }
        if let (Some((inc, _)), Some(top)) = (&s.incumbent, heap.peek()) {
            if gap(top.bound, *inc) <= cfg.gap_tol.max(OPTIMAL_GAP) {
                break;
            }
        }
    }

    let elapsed_s = start.elapsed().as_secs_f64();
    let lp_iterations = eng.iterations;
    if root_unbounded {
        return MilpSolution {
            status: MilpStatus::Unbounded,
            primal: Vec::new(),
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            gap: f64::INFINITY,
            nodes,
            lp_iterations,
            elapsed_s,
        };
    }
    let open_bound = heap
        .iter()
        .map(|n| n.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    match s.incumbent {
        None => {
            let status = match stop {
                Some(st) => st,
                None if s.numeric_trouble => MilpStatus::NumericFailure,
                None => MilpStatus::Infeasible,
            };
            MilpSolution {
                status,
                primal: Vec::new(),
                objective: f64::NEG_INFINITY,
                bound: if stop.is_some() { open_bound } else { f64::NEG_INFINITY },
                gap: f64::INFINITY,
                nodes,
                lp_iterations,
                elapsed_s,
            }
        }
        Some((obj, x)) => {
            let bound = open_bound.max(obj);
            let g = gap(bound, obj);
            let status = if g <= OPTIMAL_GAP {
                MilpStatus::Optimal
            } else if g <= cfg.gap_tol {
                MilpStatus::GapLimit
            } else {
                stop.unwrap_or(MilpStatus::Optimal)
            };
            MilpSolution {
                status,
                primal: x,
                objective: obj,
                bound,
                gap: g,
                nodes,
                lp_iterations,
                elapsed_s,
            }
        }
    }
}

/// Clamp every integer variable to its rounded value in `x` and solve the
/// remaining LP, which yields duals for the fixed-commitment problem.
pub fn fix_integers_resolve(ir: &ModelIR, x: &[f64], cfg: &SolverConfig) -> LpSolution {
    let mut fixed = ir.clone();
    for j in 0..fixed.num_vars() {
        if fixed.variables[j].integer {
            let v = x[j].round();
            fixed.set_bounds(j, v, v);
            fixed.set_integer(j, false);
        }
    }
    solve_lp(&fixed, cfg)
}
