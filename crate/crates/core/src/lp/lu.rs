//! Sparse LU factorization of a simplex basis with Forrest-Tomlin updates.
//!
//! Columns are eliminated right-looking: column singletons first, then
//! row singletons, then Markowitz pivots with threshold partial pivoting
//! on what remains. A basis change replaces one column of `U`, moves its
//! pivot to the end of the order and restores triangularity with a row
//! eta applied between `L` and `U`.

const SINGULAR_TOL: f64 = 1e-11;
const THRESHOLD: f64 = 0.1;
const DROP_TOL: f64 = 1e-14;
const UPDATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct RowEta {
    pivot: usize,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Factor {
    m: usize,
    prow: Vec<usize>,
    pcol: Vec<usize>,
    diag: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    /// Column `k` of `U`: entries `(j, u_jk)` for pivots `j` ahead of `k`.
    ucol: Vec<Vec<(usize, f64)>>,
    /// Row `j` of `U` as `(k, index into ucol[k])`.
    urow: Vec<Vec<(usize, usize)>>,
    order: Vec<usize>,
    rank: Vec<usize>,
    piv_of_pos: Vec<usize>,
    etas: Vec<RowEta>,
    eta_nnz: usize,
}

/// Result of a factorization: basis positions whose columns are dependent
/// on the others, and rows left without a pivot (same count).
#[derive(Debug, Clone, Default)]
pub(crate) struct Deficiency {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

impl Factor {
    /// Factor the `m x m` matrix whose column `c` has entries `cols[c]`.
    pub fn new(m: usize, cols: &[Vec<(usize, f64)>]) -> (Self, Deficiency) {
        let mut work = Work::new(m, cols);
        let mut f = Factor {
            m,
            l_start: vec![0],
            u_start: vec![0],
            ..Default::default()
        };
        let mut dependent = Vec::new();
        let start = std::time::Instant::now();
        loop {
            let Some((r, c)) = work.next_pivot(&mut dependent) else {
                break;
            };
            work.eliminate(r, c, &mut f);
        }
        f.finish_columns();
        log::trace!(
            "factor m={m} markowitz={} L={} U={} in {:?}",
            work.markowitz,
            f.l_idx.len(),
            f.u_nnz(),
            start.elapsed()
        );
        let rows: Vec<usize> = (0..m).filter(|&r| work.row_active[r]).collect();
        debug_assert_eq!(rows.len(), dependent.len());
        (
            f,
            Deficiency {
                positions: dependent,
                rows,
            },
        )
    }

    /// Turn the row-wise `U` built during elimination into columns indexed
    /// by pivot.
    fn finish_columns(&mut self) {
        let k_total = self.prow.len();
        self.piv_of_pos = vec![usize::MAX; self.m];
        for (k, &c) in self.pcol.iter().enumerate() {
            self.piv_of_pos[c] = k;
        }
        self.ucol = vec![Vec::new(); k_total];
        self.urow = vec![Vec::new(); k_total];
        for k in 0..k_total {
            for t in self.u_start[k]..self.u_start[k + 1] {
                let k2 = self.piv_of_pos[self.u_idx[t]];
                if k2 == usize::MAX {
                    continue;
                }
                self.urow[k].push((k2, self.ucol[k2].len()));
                self.ucol[k2].push((k, self.u_val[t]));
            }
        }
        self.u_start = Vec::new();
        self.u_idx = Vec::new();
        self.u_val = Vec::new();
        self.order = (0..k_total).collect();
        self.rank = (0..k_total).collect();
    }

    fn u_nnz(&self) -> usize {
        self.ucol.iter().map(Vec::len).sum()
    }

    pub fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_nnz() + self.m
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    /// `R L^{-1} b` in pivot coordinates.
    fn forward(&self, b: &mut [f64]) -> Vec<f64> {
        for k in 0..self.l_start.len() - 1 {
            let v = b[self.prow[k]];
            if v != 0.0 {
                for t in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[t]] -= self.l_val[t] * v;
                }
            }
        }
        let mut w: Vec<f64> = self.prow.iter().map(|&r| b[r]).collect();
        for e in &self.etas {
            let mut s = 0.0;
            for &(j, r) in &e.entries {
                s += r * w[j];
            }
            w[e.pivot] -= s;
        }
        w
    }

    /// Solve `B x = b` for `b` indexed by row; the result is indexed by
    /// basis position.
    pub fn ftran(&self, b: &mut [f64]) -> Vec<f64> {
        let mut w = self.forward(b);
        let mut x = vec![0.0; self.m];
        for &k in self.order.iter().rev() {
            let xk = w[k] / self.diag[k];
            x[self.pcol[k]] = xk;
            if xk != 0.0 {
                for &(j, u) in &self.ucol[k] {
                    w[j] -= u * xk;
                }
            }
        }
        x
    }

    /// Solve `B' y = d` for `d` indexed by basis position; the result is
    /// indexed by row.
    pub fn btran(&self, d: &mut [f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self.pcol.iter().map(|&c| d[c]).collect();
        for &k in &self.order {
            let mut s = z[k];
            for &(j, u) in &self.ucol[k] {
                s -= u * z[j];
            }
            z[k] = s / self.diag[k];
        }
        for e in self.etas.iter().rev() {
            let zp = z[e.pivot];
            if zp != 0.0 {
                for &(j, r) in &e.entries {
                    z[j] -= r * zp;
                }
            }
        }
        let mut y = vec![0.0; self.m];
        for (k, &r) in self.prow.iter().enumerate() {
            y[r] = z[k];
        }
        for k in (0..self.l_start.len() - 1).rev() {
            let (lo, hi) = (self.l_start[k], self.l_start[k + 1]);
            if lo < hi {
                let mut s = 0.0;
                for t in lo..hi {
                    s += self.l_val[t] * y[self.l_idx[t]];
                }
                y[self.prow[k]] -= s;
            }
        }
        y
    }

    /// Replace the column at basis position `pos` by `col` (indexed by
    /// row). Returns false when the new basis looks singular; the factor
    /// must then be rebuilt.
    pub fn update(&mut self, pos: usize, col: &[f64]) -> bool {
        let kp = self.piv_of_pos[pos];
        let mut b = col.to_vec();
        let w = self.forward(&mut b);
        // row eta: r' U_sub = row kp of U, over pivots behind kp
        let mut v = vec![0.0; self.prow.len()];
        for &(k, idx) in &self.urow[kp] {
            v[k] += self.ucol[k][idx].1;
        }
        let mut entries = Vec::new();
        for &j in &self.order[self.rank[kp] + 1..] {
            if v[j] == 0.0 {
                continue;
            }
            let rj = v[j] / self.diag[j];
            if rj.abs() <= DROP_TOL {
                continue;
            }
            entries.push((j, rj));
            for &(k, idx) in &self.urow[j] {
                v[k] -= self.ucol[k][idx].1 * rj;
            }
        }
        let diag = w[kp] - entries.iter().map(|&(j, r)| r * w[j]).sum::<f64>();
        let scale = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if diag.abs() <= UPDATE_TOL * scale.max(1.0) {
            return false;
        }
        for (k, idx) in std::mem::take(&mut self.urow[kp]) {
            self.ucol[k][idx].1 = 0.0;
        }
        for (j, _) in std::mem::take(&mut self.ucol[kp]) {
            self.urow[j].retain(|&(k, _)| k != kp);
        }
        let mut newcol = Vec::new();
        for (j, &wj) in w.iter().enumerate() {
            if j != kp && wj.abs() > DROP_TOL {
                self.urow[j].push((kp, newcol.len()));
                newcol.push((j, wj));
            }
        }
        self.eta_nnz += entries.len() + newcol.len() + 1;
        self.ucol[kp] = newcol;
        self.diag[kp] = diag;
        let at = self.rank[kp];
        self.order.remove(at);
        self.order.push(kp);
        for (i, &k) in self.order.iter().enumerate().skip(at) {
            self.rank[k] = i;
        }
        self.etas.push(RowEta { pivot: kp, entries });
        true
    }
}

/// Active submatrix during elimination.
struct Work {
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<usize>>,
    row_count: Vec<usize>,
    col_active: Vec<bool>,
    row_active: Vec<bool>,
    col_stack: Vec<usize>,
    row_stack: Vec<usize>,
    remaining: usize,
    markowitz: usize,
    /// Columns still active when the Markowitz search last ran.
    bump: Vec<usize>,
}

impl Work {
    fn new(m: usize, input: &[Vec<(usize, f64)>]) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut rows = vec![Vec::new(); m];
        let mut row_count = vec![0; m];
        for (c, col) in input.iter().enumerate() {
            let mut merged: Vec<(usize, f64)> = col.iter().copied().filter(|&(_, v)| v != 0.0).collect();
            merged.sort_unstable_by_key(|&(r, _)| r);
            merged.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            for &(r, _) in &merged {
                rows[r].push(c);
                row_count[r] += 1;
            }
            cols.push(merged);
        }
        let col_stack = (0..m).filter(|&c| cols[c].len() == 1).collect();
        let row_stack = (0..m).filter(|&r| row_count[r] == 1).collect();
        Self {
            cols,
            rows,
            row_count,
            col_active: vec![true; m],
            row_active: vec![true; m],
            col_stack,
            row_stack,
            remaining: m,
            markowitz: 0,
            bump: (0..m).collect(),
        }
    }

    fn col_max(&self, c: usize) -> f64 {
        self.cols[c].iter().fold(0.0, |a, &(_, v)| a.max(v.abs()))
    }

    fn next_pivot(&mut self, dependent: &mut Vec<usize>) -> Option<(usize, usize)> {
        if self.remaining == 0 {
            return None;
        }
        while let Some(c) = self.col_stack.pop() {
            if self.col_active[c] && self.cols[c].len() == 1 {
                let (r, v) = self.cols[c][0];
                if v.abs() > SINGULAR_TOL {
                    return Some((r, c));
                }
            }
        }
        while let Some(r) = self.row_stack.pop() {
            if !self.row_active[r] || self.row_count[r] != 1 {
                continue;
            }
            let Some(&c) = self.rows[r].iter().find(|&&c| self.col_active[c]) else {
                continue;
            };
            let v = self.cols[c].iter().find(|&&(i, _)| i == r).map_or(0.0, |&(_, v)| v);
            if v.abs() > SINGULAR_TOL && v.abs() >= THRESHOLD * self.col_max(c) {
                return Some((r, c));
            }
        }
        // Markowitz search over the remaining active submatrix
        self.markowitz += 1;
        let mut best: Option<(usize, usize)> = None;
        let mut best_score = usize::MAX;
        let mut best_abs = 0.0;
        let mut bump = std::mem::take(&mut self.bump);
        bump.retain(|&c| self.col_active[c]);
        for &c in &bump {
            if !self.col_active[c] {
                continue;
            }
            let cmax = self.col_max(c);
            if cmax <= SINGULAR_TOL {
                self.col_active[c] = false;
                self.remaining -= 1;
                dependent.push(c);
                let col = std::mem::take(&mut self.cols[c]);
                for (r, _) in col {
                    self.row_count[r] -= 1;
                }
                continue;
            }
            let cc = self.cols[c].len() - 1;
            for &(r, v) in &self.cols[c] {
                if v.abs() < THRESHOLD * cmax {
                    continue;
                }
                let score = (self.row_count[r] - 1) * cc;
                if score < best_score || (score == best_score && v.abs() > best_abs) {
                    best_score = score;
                    best_abs = v.abs();
                    best = Some((r, c));
                }
            }
        }
        self.bump = bump;
        best
    }

    fn eliminate(&mut self, r: usize, c: usize, f: &mut Factor) {
        let col = std::mem::take(&mut self.cols[c]);
        let piv = col.iter().find(|&&(i, _)| i == r).expect("pivot in column").1;
        self.col_active[c] = false;
        self.row_active[r] = false;
        self.remaining -= 1;

        // pivot row entries in other active columns, removed from them
        let mut urow: Vec<(usize, f64)> = Vec::new();
        let row_cols = std::mem::take(&mut self.rows[r]);
        for &c2 in &row_cols {
            if c2 == c || !self.col_active[c2] {
                continue;
            }
            let list = &mut self.cols[c2];
            if let Some(k) = list.iter().position(|&(i, _)| i == r) {
                let (_, v) = list.swap_remove(k);
                urow.push((c2, v));
                if list.len() == 1 {
                    self.col_stack.push(c2);
                }
            }
        }
        for &(i, _) in &col {
            self.row_count[i] -= 1;
        }

        for &(i, v) in &col {
            if i == r {
                continue;
            }
            let l = v / piv;
            f.l_idx.push(i);
            f.l_val.push(l);
            for &(c2, u) in &urow {
                let list = &mut self.cols[c2];
                match list.iter().position(|&(k, _)| k == i) {
                    Some(k) => {
                        list[k].1 -= l * u;
                        if list[k].1.abs() <= DROP_TOL {
                            list.swap_remove(k);
                            self.row_count[i] -= 1;
                            if list.len() == 1 {
                                self.col_stack.push(c2);
                            }
                        }
                    }
                    None => {
                        list.push((i, -l * u));
                        self.rows[i].push(c2);
                        self.row_count[i] += 1;
                    }
                }
            }
            if self.row_count[i] == 1 {
                self.row_stack.push(i);
            }
        }
        f.l_start.push(f.l_idx.len());

        f.prow.push(r);
        f.pcol.push(c);
        f.diag.push(piv);
        for (c2, u) in urow {
            f.u_idx.push(c2);
            f.u_val.push(u);
        }
        f.u_start.push(f.u_idx.len());
    }
}
