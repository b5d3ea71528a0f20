//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! The basis matrix is factored by right-looking Gaussian elimination with
//! Markowitz pivot selection and threshold partial pivoting. Column and row
//! singletons are taken first, which handles the (very common) logical
//! columns and the staircase structure of time-coupled models without fill.
//! Basis changes between refactorizations are applied as eta columns.

/// Relative threshold for accepting a pivot within its column.
const PIVOT_THRESHOLD: f64 = 0.01;
/// Entries below this magnitude are treated as structural zeros.
const DROP_TOL: f64 = 1e-14;
/// Smallest acceptable pivot magnitude.
const ABS_PIVOT_TOL: f64 = 1e-11;
/// How many shortest columns the Markowitz search inspects.
const MARKOWITZ_COLUMNS: usize = 4;

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactor {
    m: usize,
    piv_row: Vec<usize>,
    piv_col: Vec<usize>,
    piv_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

/// Result of a factorization attempt that hit rank deficiency.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    /// Basis positions that could not be pivoted.
    pub positions: Vec<usize>,
    /// Rows left without a pivot; same length as `positions`.
    pub rows: Vec<usize>,
}

impl LuFactor {
    /// Factor the `m x m` matrix whose columns are `cols` (row index, value).
    pub(crate) fn factor(m: usize, cols: Vec<Vec<(usize, f64)>>) -> Result<Self, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut col_entries = cols;
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut row_count = vec![0usize; m];
        for (c, col) in col_entries.iter_mut().enumerate() {
            col.retain(|&(_, v)| v.abs() > DROP_TOL);
            for &(r, _) in col.iter() {
                row_cols[r].push(c);
                row_count[r] += 1;
            }
        }
        let mut col_active = vec![true; m];
        let mut row_active = vec![true; m];

        let mut col_singletons: Vec<usize> =
            (0..m).filter(|&c| col_entries[c].len() == 1).collect();
        col_singletons.reverse();
        let mut row_singletons: Vec<usize> = (0..m).filter(|&r| row_count[r] == 1).collect();
        row_singletons.reverse();

        let mut f = LuFactor {
            m,
            l_start: vec![0],
            u_start: vec![0],
            ..Default::default()
        };

        for _ in 0..m {
            let mut choice: Option<(usize, usize)> = None;

            while let Some(c) = col_singletons.pop() {
                if col_active[c] && col_entries[c].len() == 1 {
                    let (r, v) = col_entries[c][0];
                    if v.abs() > ABS_PIVOT_TOL {
                        choice = Some((r, c));
                        break;
                    }
                }
            }
            if choice.is_none() {
                while let Some(r) = row_singletons.pop() {
                    if !row_active[r] || row_count[r] != 1 {
                        continue;
                    }
                    let c = match row_cols[r]
                        .iter()
                        .copied()
                        .find(|&c| col_active[c] && col_entries[c].iter().any(|&(i, _)| i == r))
                    {
                        Some(c) => c,
                        None => continue,
                    };
                    let (v, cmax) = entry_and_max(&col_entries[c], r);
                    if v.abs() > ABS_PIVOT_TOL && v.abs() >= PIVOT_THRESHOLD * cmax {
                        choice = Some((r, c));
                        break;
                    }
                }
            }
            if choice.is_none() {
                choice = markowitz(&col_entries, &col_active, &row_count);
            }
            let Some((r, c)) = choice else {
                break;
            };

            // Extract the pivot row (U) from the other active columns.
            let mut urow: Vec<(usize, f64)> = Vec::new();
            for &j in &row_cols[r] {
                if !col_active[j] || j == c {
                    continue;
                }
                if let Some(pos) = col_entries[j].iter().position(|&(i, _)| i == r) {
                    let (_, v) = col_entries[j].swap_remove(pos);
                    urow.push((j, v));
                }
            }
            let pivot = col_entries[c]
                .iter()
                .find(|&&(i, _)| i == r)
                .map(|&(_, v)| v)
                .expect("pivot entry present");
            let lcol: Vec<(usize, f64)> = col_entries[c]
                .iter()
                .filter(|&&(i, _)| i != r)
                .map(|&(i, v)| (i, v / pivot))
                .collect();
            col_active[c] = false;
            row_active[r] = false;
            col_entries[c].clear();

            for &(i, l) in &lcol {
                row_count[i] -= 1;
                for &(j, u) in &urow {
                    let col = &mut col_entries[j];
                    match col.iter().position(|&(ii, _)| ii == i) {
                        Some(pos) => {
                            col[pos].1 -= l * u;
                            if col[pos].1.abs() <= DROP_TOL {
                                col.swap_remove(pos);
                                row_count[i] -= 1;
                            }
                        }
                        None => {
                            col.push((i, -l * u));
                            row_cols[i].push(j);
                            row_count[i] += 1;
                        }
                    }
                }
                if row_count[i] == 1 {
                    row_singletons.push(i);
                }
                // Keep row patterns from growing without bound.
                if row_cols[i].len() > 4 * row_count[i] + 8 {
                    let active = &col_active;
                    row_cols[i].retain(|&j| active[j]);
                }
            }
            for &(j, _) in &urow {
                if col_entries[j].len() == 1 {
                    col_singletons.push(j);
                }
            }

            f.piv_row.push(r);
            f.piv_col.push(c);
            f.piv_val.push(pivot);
            for (i, l) in lcol {
                f.l_idx.push(i);
                f.l_val.push(l);
            }
            f.l_start.push(f.l_idx.len());
            for (j, u) in urow {
                f.u_idx.push(j);
                f.u_val.push(u);
            }
            f.u_start.push(f.u_idx.len());
        }

        if f.piv_row.len() < m {
            let positions = (0..m).filter(|&c| col_active[c]).collect();
            let rows = (0..m).filter(|&r| row_active[r]).collect();
            return Err(Singular { positions, rows });
        }
        Ok(f)
    }

    pub(crate) fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Solve `B x = b` in place: `b` is indexed by row on entry and by basis
    /// position on exit.
    pub(crate) fn ftran(&self, b: &mut [f64], work: &mut Vec<f64>) {
        let m = self.m;
        for k in 0..m {
            let yr = b[self.piv_row[k]];
            if yr != 0.0 {
                for p in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[p]] -= self.l_val[p] * yr;
                }
            }
        }
        work.clear();
        work.resize(m, 0.0);
        for k in (0..m).rev() {
            let mut s = b[self.piv_row[k]];
            for p in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[p] * work[self.u_idx[p]];
            }
            work[self.piv_col[k]] = s / self.piv_val[k];
        }
        b.copy_from_slice(work);
    }

    /// Solve `B^T y = d` in place: `d` is indexed by basis position on entry
    /// and by row on exit.
    pub(crate) fn btran(&self, d: &mut [f64], work: &mut Vec<f64>) {
        let m = self.m;
        work.clear();
        work.resize(m, 0.0);
        for k in 0..m {
            let z = d[self.piv_col[k]] / self.piv_val[k];
            work[self.piv_row[k]] = z;
            if z != 0.0 {
                for p in self.u_start[k]..self.u_start[k + 1] {
                    d[self.u_idx[p]] -= self.u_val[p] * z;
                }
            }
        }
        for k in (0..m).rev() {
            let r = self.piv_row[k];
            let mut s = work[r];
            for p in self.l_start[k]..self.l_start[k + 1] {
                s -= self.l_val[p] * work[self.l_idx[p]];
            }
            work[r] = s;
        }
        d.copy_from_slice(work);
    }
}

fn entry_and_max(col: &[(usize, f64)], r: usize) -> (f64, f64) {
    let mut v = 0.0;
    let mut cmax = 0.0f64;
    for &(i, a) in col {
        if i == r {
            v = a;
        }
        cmax = cmax.max(a.abs());
    }
    (v, cmax)
}

fn markowitz(
    col_entries: &[Vec<(usize, f64)>],
    col_active: &[bool],
    row_count: &[usize],
) -> Option<(usize, usize)> {
    let mut shortest: Vec<(usize, usize)> = col_active
        .iter()
        .enumerate()
        .filter(|&(c, &a)| a && !col_entries[c].is_empty())
        .map(|(c, _)| (col_entries[c].len(), c))
        .collect();
    if shortest.is_empty() {
        return None;
    }
    let take = MARKOWITZ_COLUMNS.min(shortest.len());
    shortest.select_nth_unstable(take - 1);
    shortest.truncate(take);
    shortest.sort_unstable();

    let mut best: Option<(usize, f64, usize, usize)> = None;
    for &(len, c) in &shortest {
        let cmax = col_entries[c].iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        if cmax <= ABS_PIVOT_TOL {
            continue;
        }
        for &(r, v) in &col_entries[c] {
            if v.abs() < PIVOT_THRESHOLD * cmax || v.abs() <= ABS_PIVOT_TOL {
                continue;
            }
            let cost = (row_count[r] - 1) * (len - 1);
            let better = match best {
                None => true,
                Some((bc, bv, _, _)) => cost < bc || (cost == bc && v.abs() > bv),
            };
            if better {
                best = Some((cost, v.abs(), r, c));
            }
        }
    }
    best.map(|(_, _, r, c)| (r, c))
}

/// Basis factorization plus product-form updates since the last refactor.
#[derive(Debug, Clone, Default)]
pub(crate) struct BasisFactor {
    lu: LuFactor,
    eta_pos: Vec<usize>,
    eta_pivot: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
    work: Vec<f64>,
}

impl BasisFactor {
    pub(crate) fn new(lu: LuFactor) -> Self {
        BasisFactor {
            lu,
            eta_start: vec![0],
            ..Default::default()
        }
    }

    pub(crate) fn updates(&self) -> usize {
        self.eta_pos.len()
    }

    pub(crate) fn eta_nnz(&self) -> usize {
        self.eta_idx.len()
    }

    pub(crate) fn lu_nnz(&self) -> usize {
        self.lu.nnz()
    }

    /// Record that basis position `pos` is replaced by a column whose
    /// FTRAN image is `alpha`.
    pub(crate) fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        self.eta_pos.push(pos);
        self.eta_pivot.push(alpha[pos]);
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }

    pub(crate) fn ftran(&mut self, b: &mut [f64]) {
        self.lu.ftran(b, &mut self.work);
        for k in 0..self.eta_pos.len() {
            let p = self.eta_pos[k];
            let xp = b[p] / self.eta_pivot[k];
            b[p] = xp;
            if xp != 0.0 {
                for q in self.eta_start[k]..self.eta_start[k + 1] {
                    b[self.eta_idx[q]] -= self.eta_val[q] * xp;
                }
            }
        }
    }

    pub(crate) fn btran(&mut self, d: &mut [f64]) {
        for k in (0..self.eta_pos.len()).rev() {
            let p = self.eta_pos[k];
            let mut s = d[p];
            for q in self.eta_start[k]..self.eta_start[k + 1] {
                s -= self.eta_val[q] * d[self.eta_idx[q]];
            }
            d[p] = s / self.eta_pivot[k];
        }
        self.lu.btran(d, &mut self.work);
    }
}
