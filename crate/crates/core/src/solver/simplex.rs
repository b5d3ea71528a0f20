//! Bounded revised primal simplex.
//!
//! Works on the computational form `A x - r = 0` where every row owns a
//! logical variable `r` carrying the row's bounds. The problem is minimized
//! internally; callers see maximization through [`super::LpSolution`].
//! Phase 1 minimizes the sum of bound infeasibilities of basic variables.

use std::time::Instant;

use super::lu::{BasisFactor, LuFactor};
use super::SolverConfig;
use crate::formulation::{ModelIR, Sense};

const REFACTOR_INTERVAL: usize = 100;
const PIVOT_TOL: f64 = 1e-9;
const STALL_LIMIT: usize = 60;
/// Scale factors are clamped to `[1/MAX_SCALE, MAX_SCALE]`; wider factors
/// spread bounds over so many magnitudes that absolute tolerances lose meaning.
const MAX_SCALE: f64 = 256.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
    NumericFailure,
}

/// Scaled problem data shared by every solve of one model.
#[derive(Debug, Clone)]
pub(crate) struct ScaledLp {
    pub m: usize,
    pub n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    pub obj_scale: f64,
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
    pub cost: Vec<f64>,
}

fn pow2_round(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        return 1.0;
    }
    2f64.powi(x.log2().round() as i32)
}

impl ScaledLp {
    pub(crate) fn from_ir(ir: &ModelIR) -> Self {
        let m = ir.num_constraints();
        let n = ir.num_vars();
        // row-major copy for scaling
        let rows: Vec<Vec<(usize, f64)>> =
            ir.constraints.iter().map(|c| c.terms.clone()).collect();
        let mut row_scale = vec![1.0; m];
        let mut col_scale = vec![1.0; n];
        for _pass in 0..6 {
            for (i, row) in rows.iter().enumerate() {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for &(j, a) in row {
                    let v = (a * col_scale[j]).abs();
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if hi > 0.0 {
                    row_scale[i] = 1.0 / (lo * hi).sqrt();
                }
            }
            let mut cmin = vec![f64::INFINITY; n];
            let mut cmax = vec![0.0f64; n];
            for (i, row) in rows.iter().enumerate() {
                for &(j, a) in row {
                    let v = (a * row_scale[i]).abs();
                    cmin[j] = cmin[j].min(v);
                    cmax[j] = cmax[j].max(v);
                }
            }
            for j in 0..n {
                if cmax[j] > 0.0 {
                    col_scale[j] = 1.0 / (cmin[j] * cmax[j]).sqrt();
                }
            }
        }
        for s in row_scale.iter_mut() {
            *s = pow2_round(s.clamp(1.0 / MAX_SCALE, MAX_SCALE));
        }
        for s in col_scale.iter_mut() {
            *s = pow2_round(s.clamp(1.0 / MAX_SCALE, MAX_SCALE));
        }

        let mut counts = vec![0usize; n + 1];
        for row in &rows {
            for &(j, _) in row {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, row) in rows.iter().enumerate() {
            for &(j, a) in row {
                let p = fill[j];
                col_row[p] = i;
                col_val[p] = a * row_scale[i] * col_scale[j];
                fill[j] += 1;
            }
        }

        let mut lo = vec![0.0; n + m];
        let mut up = vec![0.0; n + m];
        for (j, v) in ir.variables.iter().enumerate() {
            lo[j] = v.lower / col_scale[j];
            up[j] = v.upper / col_scale[j];
        }
        for (i, c) in ir.constraints.iter().enumerate() {
            let b = c.rhs * row_scale[i];
            let (l, u) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, b),
                Sense::Ge => (b, f64::INFINITY),
                Sense::Eq => (b, b),
            };
            lo[n + i] = l;
            up[n + i] = u;
        }
        let mut cost = vec![0.0; n + m];
        for &(j, c) in &ir.objective {
            cost[j] = -c * col_scale[j];
        }
        let cmax = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let obj_scale = if cmax > 0.0 { pow2_round(1.0 / cmax) } else { 1.0 };
        for c in cost.iter_mut() {
            *c *= obj_scale;
        }
        ScaledLp {
            m,
            n,
            col_start,
            col_row,
            col_val,
            row_scale,
            col_scale,
            obj_scale,
            lo,
            up,
            cost,
        }
    }

    #[inline]
    fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_start[j], self.col_start[j + 1]);
        (&self.col_row[a..b], &self.col_val[a..b])
    }

    /// `y . A_j` for structural or logical column `j`.
    #[inline]
    fn dot_col(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(|(&r, &v)| y[r] * v).sum()
        } else {
            -y[j - self.n]
        }
    }

    fn scatter_col(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            let (rows, vals) = self.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                out[r] = v;
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    fn sparse_col(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            let (rows, vals) = self.col(j);
            rows.iter().copied().zip(vals.iter().copied()).collect()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }
}

/// Basis description that can be carried between related solves.
#[derive(Debug, Clone)]
pub(crate) struct BasisSnapshot {
    pub state: Vec<VarState>,
    pub basis: Vec<usize>,
}

pub(crate) struct Simplex<'a> {
    lp: &'a ScaledLp,
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
    pub state: Vec<VarState>,
    pub basis: Vec<usize>,
    pub x: Vec<f64>,
    factor: BasisFactor,
    dirty: bool,
    feas_tol: f64,
    opt_tol: f64,
    harris_tol: f64,
    pub iterations: usize,
    col_buf: Vec<f64>,
}

impl<'a> Simplex<'a> {
    pub(crate) fn new(lp: &'a ScaledLp, cfg: &SolverConfig) -> Self {
        let (m, n) = (lp.m, lp.n);
        let mut state = vec![VarState::AtLower; n + m];
        for s in state.iter_mut().skip(n) {
            *s = VarState::Basic;
        }
        let basis = (n..n + m).collect();
        let mut s = Simplex {
            lp,
            lo: lp.lo.clone(),
            up: lp.up.clone(),
            state,
            basis,
            x: vec![0.0; n + m],
            factor: BasisFactor::default(),
            dirty: true,
            feas_tol: cfg.feas_tol,
            opt_tol: cfg.opt_tol,
            harris_tol: cfg.harris_tol,
            iterations: 0,
            col_buf: vec![0.0; m],
        };
        s.fix_nonbasic_states();
        s
    }

    pub(crate) fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            state: self.state.clone(),
            basis: self.basis.clone(),
        }
    }

    pub(crate) fn restore(&mut self, snap: &BasisSnapshot) {
        self.state.clone_from(&snap.state);
        self.basis.clone_from(&snap.basis);
        self.dirty = true;
    }

    /// Set bounds of structural variable `j` in unscaled units.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, up: f64) {
        let s = self.lp.col_scale[j];
        self.lo[j] = lo / s;
        self.up[j] = up / s;
        self.dirty = true;
    }

    pub(crate) fn reset_bounds(&mut self) {
        self.lo.clone_from(&self.lp.lo);
        self.up.clone_from(&self.lp.up);
        self.dirty = true;
    }

    fn fix_nonbasic_states(&mut self) {
        for j in 0..self.state.len() {
            let (l, u) = (self.lo[j], self.up[j]);
            let st = &mut self.state[j];
            match *st {
                VarState::Basic => continue,
                VarState::AtLower if l.is_finite() => {}
                VarState::AtUpper if u.is_finite() => {}
                VarState::Free if !l.is_finite() && !u.is_finite() => {}
                _ => {
                    *st = if l.is_finite() {
                        VarState::AtLower
                    } else if u.is_finite() {
                        VarState::AtUpper
                    } else {
                        VarState::Free
                    };
                }
            }
            self.x[j] = match *st {
                VarState::AtLower => l,
                VarState::AtUpper => u,
                _ => 0.0,
            };
        }
    }

    /// Factor the current basis, repairing rank deficiency with logicals.
    fn refactor(&mut self) -> bool {
        let m = self.lp.m;
        for _attempt in 0..8 {
            let cols: Vec<Vec<(usize, f64)>> =
                self.basis.iter().map(|&j| self.lp.sparse_col(j)).collect();
            match LuFactor::factor(m, cols) {
                Ok(lu) => {
                    self.factor = BasisFactor::new(lu);
                    return true;
                }
                Err(sing) => {
                    log::debug!("basis rank deficient by {}, repairing", sing.positions.len());
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.basis[pos];
                        let logical = self.lp.n + row;
                        self.state[out] = VarState::AtLower;
                        self.state[logical] = VarState::Basic;
                        self.basis[pos] = logical;
                    }
                    self.fix_nonbasic_states();
                }
            }
        }
        false
    }

    fn compute_basic_values(&mut self) {
        let m = self.lp.m;
        let n = self.lp.n;
        let mut rhs = vec![0.0; m];
        for j in 0..n + m {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            if j < n {
                let (rows, vals) = self.lp.col(j);
                for (&r, &v) in rows.iter().zip(vals) {
                    rhs[r] -= v * xj;
                }
            } else {
                rhs[j - n] += xj;
            }
        }
        self.factor.ftran(&mut rhs);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    fn reinit(&mut self) -> bool {
        // basis/state may disagree after restore
        for j in 0..self.state.len() {
            if self.state[j] == VarState::Basic {
                self.state[j] = VarState::AtLower;
            }
        }
        for &j in &self.basis {
            self.state[j] = VarState::Basic;
        }
        self.fix_nonbasic_states();
        if !self.refactor() {
            return false;
        }
        self.fix_nonbasic_states();
        self.compute_basic_values();
        self.dirty = false;
        true
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.x[j];
        if x < self.lo[j] - self.feas_tol {
            self.lo[j] - x
        } else if x > self.up[j] + self.feas_tol {
            x - self.up[j]
        } else {
            0.0
        }
    }

    /// Dual vector for phase 1 (`phase1 == true`) or phase 2 costs.
    fn duals(&mut self, phase1: bool) -> Vec<f64> {
        let mut y: Vec<f64> = self
            .basis
            .iter()
            .map(|&j| {
                if phase1 {
                    let x = self.x[j];
                    if x < self.lo[j] - self.feas_tol {
                        -1.0
                    } else if x > self.up[j] + self.feas_tol {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    self.lp.cost[j]
                }
            })
            .collect();
        self.factor.btran(&mut y);
        y
    }

    pub(crate) fn reduced_cost(&self, j: usize, y: &[f64], phase1: bool) -> f64 {
        let c = if phase1 { 0.0 } else { self.lp.cost[j] };
        c - self.lp.dot_col(j, y)
    }

    fn price(&self, y: &[f64], phase1: bool, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opt_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.state.len() {
            let dir = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower => {
                    if self.up[j] <= self.lo[j] {
                        continue;
                    }
                    let d = self.reduced_cost(j, y, phase1);
                    if d < -tol {
                        (1.0, -d)
                    } else {
                        continue;
                    }
                }
                VarState::AtUpper => {
                    if self.up[j] <= self.lo[j] {
                        continue;
                    }
                    let d = self.reduced_cost(j, y, phase1);
                    if d > tol {
                        (-1.0, d)
                    } else {
                        continue;
                    }
                }
                VarState::Free => {
                    let d = self.reduced_cost(j, y, phase1);
                    if d.abs() > tol {
                        (-d.signum(), d.abs())
                    } else {
                        continue;
                    }
                }
            };
            if bland {
                return Some((j, dir.0));
            }
            if dir.1 > best_score {
                best_score = dir.1;
                best = Some((j, dir.0));
            }
        }
        best
    }

    /// Run simplex iterations from the current basis.
    pub(crate) fn solve(&mut self, max_iter: usize, deadline: Option<Instant>) -> RawStatus {
        if self.dirty && !self.reinit() {
            return RawStatus::NumericFailure;
        }
        let m = self.lp.m;
        let mut alpha = vec![0.0; m];
        let mut stall = 0usize;
        let mut bland = false;
        let mut numeric_retries = 0usize;
        let start_iter = self.iterations;

        loop {
            if self.iterations - start_iter >= max_iter {
                return RawStatus::IterationLimit;
            }
            if let Some(d) = deadline {
                if self.iterations % 64 == 0 && Instant::now() >= d {
                    return RawStatus::TimeLimit;
                }
            }
            if self.factor.updates() >= REFACTOR_INTERVAL
                || self.factor.eta_nnz() > 4 * self.factor.lu_nnz() + 10 * m
            {
                if !self.refactor() {
                    return RawStatus::NumericFailure;
                }
                self.fix_nonbasic_states();
                self.compute_basic_values();
            }

            let phase1 = self.basis.iter().any(|&j| self.infeasibility(j) > 0.0);
            let y = self.duals(phase1);
            let Some((q, dir)) = self.price(&y, phase1, bland) else {
                if self.factor.updates() > 0 {
                    // confirm on a fresh factorization
                    if !self.refactor() {
                        return RawStatus::NumericFailure;
                    }
                    self.fix_nonbasic_states();
                    self.compute_basic_values();
                    continue;
                }
                return if phase1 {
                    RawStatus::Infeasible
                } else {
                    RawStatus::Optimal
                };
            };

            self.lp.scatter_col(q, &mut self.col_buf);
            alpha.copy_from_slice(&self.col_buf);
            self.factor.ftran(&mut alpha);

            let step = self.ratio_test(&alpha, q, dir, bland);
            match step {
                Step::Unbounded => {
                    if phase1 || self.factor.updates() > 0 {
                        numeric_retries += 1;
                        if numeric_retries > 3 || !self.refactor() {
                            return RawStatus::NumericFailure;
                        }
                        self.fix_nonbasic_states();
                        self.compute_basic_values();
                        continue;
                    }
                    return RawStatus::Unbounded;
                }
                Step::Flip(theta) => {
                    self.apply_step(&alpha, q, dir, theta);
                    self.state[q] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
                    stall = 0;
                    bland = false;
                }
                Step::Pivot {
                    pos,
                    theta,
                    to_upper,
                } => {
                    self.apply_step(&alpha, q, dir, theta);
                    let leaving = self.basis[pos];
                    if to_upper {
                        self.state[leaving] = VarState::AtUpper;
                        self.x[leaving] = self.up[leaving];
                    } else {
                        self.state[leaving] = VarState::AtLower;
                        self.x[leaving] = self.lo[leaving];
                    }
                    self.state[q] = VarState::Basic;
                    self.basis[pos] = q;
                    self.factor.push_eta(pos, &alpha);
                    if theta <= 1e-12 {
                        stall += 1;
                        if stall > STALL_LIMIT {
                            bland = true;
                        }
                    } else {
                        stall = 0;
                        bland = false;
                    }
                }
            }
            self.iterations += 1;
        }
    }

    fn apply_step(&mut self, alpha: &[f64], q: usize, dir: f64, theta: f64) {
        if theta != 0.0 {
            for (p, &j) in self.basis.iter().enumerate() {
                self.x[j] -= dir * theta * alpha[p];
            }
        }
        self.x[q] += dir * theta;
    }

    fn ratio_test(&self, alpha: &[f64], q: usize, dir: f64, bland: bool) -> Step {
        let ftol = self.feas_tol;
        let range = self.up[q] - self.lo[q];
        let tol = if bland { 0.0 } else { self.harris_tol.max(ftol) };

        // candidates: (pos, exact ratio, relaxed ratio, to_upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (p, &j) in self.basis.iter().enumerate() {
            let a = alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            let x = self.x[j];
            let (l, u) = (self.lo[j], self.up[j]);
            if rate < 0.0 {
                if x > u + ftol {
                    let r = (x - u) / -rate;
                    cands.push((p, r, r, true));
                } else if x >= l - ftol && l.is_finite() {
                    cands.push((p, (x - l) / -rate, (x - l + tol) / -rate, false));
                }
            } else if x < l - ftol {
                let r = (l - x) / rate;
                cands.push((p, r, r, false));
            } else if x <= u + ftol && u.is_finite() {
                cands.push((p, (u - x) / rate, (u - x + tol) / rate, true));
            }
        }

        if cands.is_empty() {
            return if range.is_finite() {
                Step::Flip(range)
            } else {
                Step::Unbounded
            };
        }

        let chosen = if bland {
            let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= min + 1e-12)
                .min_by_key(|c| self.basis[c.0])
                .copied()
                .expect("nonempty")
        } else {
            let theta_max = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            let mut best = None::<(usize, f64, f64, bool)>;
            for &c in &cands {
                if c.1 <= theta_max {
                    let better = match best {
                        None => true,
                        Some(b) => {
                            let (ac, ab) = (alpha[c.0].abs(), alpha[b.0].abs());
                            ac > ab || (ac == ab && self.basis[c.0] < self.basis[b.0])
                        }
                    };
                    if better {
                        best = Some(c);
                    }
                }
            }
            best.expect("theta_max candidate exists")
        };

        let theta = chosen.1.max(0.0);
        if range.is_finite() && range <= theta {
            return Step::Flip(range);
        }
        Step::Pivot {
            pos: chosen.0,
            theta,
            to_upper: chosen.3,
        }
    }

    /// Refactor and recompute primal values; used before reporting.
    pub(crate) fn polish(&mut self) -> bool {
        if !self.refactor() {
            return false;
        }
        self.fix_nonbasic_states();
        self.compute_basic_values();
        true
    }

    /// Phase-2 dual vector on the current factorization.
    pub(crate) fn phase2_duals(&mut self) -> Vec<f64> {
        self.duals(false)
    }

    pub(crate) fn lp(&self) -> &'a ScaledLp {
        self.lp
    }

    pub(crate) fn degenerate(&self) -> bool {
        self.basis.iter().any(|&j| {
            let x = self.x[j];
            (self.lo[j].is_finite() && (x - self.lo[j]).abs() <= 1e-9)
                || (self.up[j].is_finite() && (x - self.up[j]).abs() <= 1e-9)
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Unbounded,
    Flip(f64),
    Pivot { pos: usize, theta: f64, to_upper: bool },
}
