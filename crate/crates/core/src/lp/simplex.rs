//! Bounded-variable revised simplex on the computational form
//!
//! ```text
//! min c'x   s.t.   row_lower <= A x <= row_upper,   lower <= x <= upper
//! ```
//!
//! Every row gets a logical variable `s_r` with `A_r x - s_r = 0` and
//! `s_r` bounded by the row range. Rows whose activity starts outside its
//! range get an artificial column; phase 1 drives the artificials to zero.
//! The basis is held as a sparse LU factorization with product-form
//! updates and periodic refactorization.

use super::lu::Factor;

const PIVOT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-8;
const RECOMPUTE_EVERY: usize = 64;
const REFACTOR_EVERY: usize = 500;

#[derive(Debug, Clone)]
pub(crate) struct CompForm {
    pub m: usize,
    pub n: usize,
    pub col_start: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub vals: Vec<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub row_lower: Vec<f64>,
    pub row_upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub outcome: Outcome,
    /// Structural values.
    pub x: Vec<f64>,
    /// Row duals: reduced cost of column j is `c_j - sum_r y_r a_rj`.
    pub y: Vec<f64>,
    pub iterations: usize,
}

impl CompForm {
    /// Geometric-mean equilibration, rounded to powers of two. Returns
    /// `(row_scale, col_scale)`; the scaled matrix is `R A C`.
    pub fn scale(&mut self) -> (Vec<f64>, Vec<f64>) {
        let mut rs = vec![1.0; self.m];
        let mut cs = vec![1.0; self.n];
        for _ in 0..6 {
            let mut rmax = vec![0.0f64; self.m];
            let mut rmin = vec![f64::INFINITY; self.m];
            for j in 0..self.n {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    let v = (self.vals[k] * rs[self.row_idx[k]] * cs[j]).abs();
                    let r = self.row_idx[k];
                    rmax[r] = rmax[r].max(v);
                    rmin[r] = rmin[r].min(v);
                }
            }
            for r in 0..self.m {
                if rmax[r] > 0.0 {
                    rs[r] /= (rmax[r] * rmin[r]).sqrt();
                }
            }
            for j in 0..self.n {
                let mut cmax = 0.0f64;
                let mut cmin = f64::INFINITY;
                for k in self.col_start[j]..self.col_start[j + 1] {
                    let v = (self.vals[k] * rs[self.row_idx[k]] * cs[j]).abs();
                    cmax = cmax.max(v);
                    cmin = cmin.min(v);
                }
                if cmax > 0.0 {
                    cs[j] /= (cmax * cmin).sqrt();
                }
            }
        }
        let pow2 = |v: f64| 2f64.powi(v.log2().round() as i32);
        for v in rs.iter_mut() {
            *v = pow2(*v);
        }
        for v in cs.iter_mut() {
            *v = pow2(*v);
        }
        for j in 0..self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                self.vals[k] *= rs[self.row_idx[k]] * cs[j];
            }
            self.cost[j] *= cs[j];
            self.lower[j] /= cs[j];
            self.upper[j] /= cs[j];
        }
        for r in 0..self.m {
            self.row_lower[r] *= rs[r];
            self.row_upper[r] *= rs[r];
        }
        (rs, cs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Structural,
    Logical(usize),
    Artificial(usize, f64),
}

struct Solver<'a> {
    form: &'a CompForm,
    m: usize,
    kinds: Vec<Kind>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    factor: Factor,
    pi: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    updates_since_inversion: usize,
    degenerate_run: usize,
    bland_after: usize,
    /// Artificial columns while phase 1 runs; empty otherwise.
    phase_one: Vec<usize>,
    /// Reduced costs kept by the dual simplex.
    d: Vec<f64>,
    /// Dual steepest-edge weights by basis position.
    dse: Vec<f64>,
}

const NOT_BASIC: usize = usize::MAX;

impl<'a> Solver<'a> {
    fn new(form: &'a CompForm, artificials: bool) -> Self {
        let m = form.m;
        let n = form.n;
        let mut kinds = Vec::with_capacity(n + m);
        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        let mut x = Vec::with_capacity(n + m);
        for j in 0..n {
            kinds.push(Kind::Structural);
            lo.push(form.lower[j]);
            up.push(form.upper[j]);
            x.push(initial_value(form.lower[j], form.upper[j]));
        }
        // row activities at the starting point
        let mut act = vec![0.0; m];
        for j in 0..n {
            if x[j] != 0.0 {
                for k in form.col_start[j]..form.col_start[j + 1] {
                    act[form.row_idx[k]] += form.vals[k] * x[j];
                }
            }
        }
        let mut basis = vec![0usize; m];
        let mut artificial = Vec::new();
        for r in 0..m {
            kinds.push(Kind::Logical(r));
            lo.push(form.row_lower[r]);
            up.push(form.row_upper[r]);
            let a = act[r];
            if !artificials || (a >= form.row_lower[r] - PRIMAL_TOL && a <= form.row_upper[r] + PRIMAL_TOL) {
                x.push(a);
                basis[r] = n + r;
            } else {
                let target = if a < form.row_lower[r] {
                    form.row_lower[r]
                } else {
                    form.row_upper[r]
                };
                x.push(target);
                artificial.push((r, target - a));
            }
        }
        for (r, gap) in artificial {
            // A_r x - s_r + sigma a_r = 0  =>  sigma a_r = s_r - A_r x
            let sigma = gap.signum();
            kinds.push(Kind::Artificial(r, sigma));
            lo.push(0.0);
            up.push(f64::INFINITY);
            x.push(gap.abs());
            basis[r] = kinds.len() - 1;
        }
        let total = kinds.len();
        let mut pos = vec![NOT_BASIC; total];
        for (i, &j) in basis.iter().enumerate() {
            pos[j] = i;
        }
        let size = n + m;
        let mut s = Self {
            form,
            m,
            kinds,
            lo,
            up,
            cost: vec![0.0; total],
            x,
            basis,
            pos,
            factor: Factor::default(),
            pi: vec![0.0; m],
            iterations: 0,
            max_iterations: 100 * size + 20_000,
            updates_since_inversion: 0,
            degenerate_run: 0,
            bland_after: 50 * size,
            phase_one: Vec::new(),
            d: Vec::new(),
            dse: Vec::new(),
        };
        s.reinvert();
        s
    }

    fn total(&self) -> usize {
        self.kinds.len()
    }

    /// Calls `f(row, value)` for each nonzero of column `j`.
    #[inline]
    fn for_col<F: FnMut(usize, f64)>(&self, j: usize, mut f: F) {
        match self.kinds[j] {
            Kind::Structural => {
                let form = self.form;
                for k in form.col_start[j]..form.col_start[j + 1] {
                    f(form.row_idx[k], form.vals[k]);
                }
            }
            Kind::Logical(r) => f(r, -1.0),
            Kind::Artificial(r, s) => f(r, s),
        }
    }

    #[inline]
    fn dot_pi(&self, j: usize) -> f64 {
        match self.kinds[j] {
            Kind::Structural => {
                let form = self.form;
                let mut acc = 0.0;
                for k in form.col_start[j]..form.col_start[j + 1] {
                    acc += self.pi[form.row_idx[k]] * form.vals[k];
                }
                acc
            }
            Kind::Logical(r) => -self.pi[r],
            Kind::Artificial(r, s) => s * self.pi[r],
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.m];
        self.for_col(j, |r, a| b[r] += a);
        self.factor.ftran(&mut b)
    }

    /// Row `p` of the basis inverse, indexed by row.
    fn btran_unit(&self, p: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.m];
        d[p] = 1.0;
        self.factor.btran(&mut d)
    }

    fn compute_pi(&mut self) {
        let mut cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.pi = self.factor.btran(&mut cb);
    }

    fn compute_xb(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.total() {
            if self.pos[j] == NOT_BASIC && self.x[j] != 0.0 {
                let v = self.x[j];
                self.for_col(j, |r, a| rhs[r] -= a * v);
            }
        }
        let xb = self.factor.ftran(&mut rhs);
        for (i, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[i];
        }
    }

    /// Refactor the basis. Columns found dependent are swapped for the
    /// logicals of rows left without a pivot.
    fn reinvert(&mut self) {
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self
                .basis
                .iter()
                .map(|&j| {
                    let mut col = Vec::new();
                    self.for_col(j, |r, a| col.push((r, a)));
                    col
                })
                .collect();
            let (factor, def) = Factor::new(self.m, &cols);
            self.factor = factor;
            self.updates_since_inversion = 0;
            if def.positions.is_empty() {
                return;
            }
            log::debug!("refactorization found {} dependent basis columns", def.positions.len());
            for (c, r) in def.positions.into_iter().zip(def.rows) {
                let j = self.basis[c];
                self.pos[j] = NOT_BASIC;
                self.x[j] = snap_to_bound(self.x[j], self.lo[j], self.up[j]);
                let logical = self.form.n + r;
                debug_assert_eq!(self.pos[logical], NOT_BASIC);
                self.basis[c] = logical;
                self.pos[logical] = c;
            }
        }
    }

    fn refresh(&mut self) {
        self.reinvert();
        self.compute_xb();
        self.compute_pi();
    }

    fn price(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.total() {
            if self.pos[j] != NOT_BASIC {
                continue;
            }
            let (lo, up) = (self.lo[j], self.up[j]);
            if lo == up {
                continue;
            }
            let d = self.cost[j] - self.dot_pi(j);
            let xj = self.x[j];
            let can_increase = xj < up - PRIMAL_TOL;
            let can_decrease = xj > lo + PRIMAL_TOL;
            let eligible = (d < -DUAL_TOL && can_increase) || (d > DUAL_TOL && can_decrease);
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, d));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, d));
            }
        }
        best
    }

    /// One simplex run on the current cost vector.
    fn run(&mut self) -> Outcome {
        self.compute_pi();
        let mut since_recompute = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::Stalled;
            }
            if since_recompute >= RECOMPUTE_EVERY {
                since_recompute = 0;
                if self.needs_refactor() {
                    self.refresh();
                } else {
                    self.compute_xb();
                    self.compute_pi();
                }
            }
            if !self.phase_one.is_empty() && self.artificial_sum() <= PHASE1_TOL * 1e-2 {
                return Outcome::Optimal;
            }
            let bland = self.degenerate_run >= self.bland_after;
            let Some((q, d)) = self.price(bland) else {
                // confirm on fresh data before declaring optimality
                if since_recompute == 0 && self.updates_since_inversion == 0 {
                    return Outcome::Optimal;
                }
                self.refresh();
                since_recompute = 0;
                if self.price(bland).is_none() {
                    return Outcome::Optimal;
                }
                continue;
            };
            self.iterations += 1;
            since_recompute += 1;
            if self.iterations % 1000 == 0 {
                let obj: f64 = (0..self.total()).map(|j| self.cost[j] * self.x[j]).sum();
                log::trace!("iteration {}: objective {obj:e}, degenerate run {}", self.iterations, self.degenerate_run);
            }
            let dir = if d < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);
            let (theta, leave) = self.ratio_test(q, dir, &alpha, bland);
            if theta.is_infinite() {
                return Outcome::Unbounded;
            }
            if theta <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            // move
            let step = dir * theta;
            self.x[q] += step;
            for (i, &j) in self.basis.iter().enumerate() {
                if alpha[i] != 0.0 {
                    self.x[j] -= alpha[i] * step;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
                }
                Some((p, at_upper)) => {
                    let out = self.basis[p];
                    self.x[out] = if at_upper { self.up[out] } else { self.lo[out] };
                    self.pivot(q, p);
                }
            }
        }
    }

    /// Returns the step length and, unless the entering variable just flips
    /// bounds, the leaving position and whether it leaves at its upper bound.
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> (f64, Option<(usize, bool)>) {
        let flip = self.up[q] - self.lo[q];
        if bland {
            let mut best = flip;
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                if alpha[i].abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[i];
                let rate = -dir * alpha[i];
                let (ratio, at_upper) = bound_ratio(self.x[j], self.lo[j], self.up[j], rate, 0.0);
                let better = ratio < best
                    || (ratio == best && leave.is_some_and(|(p, _)| j < self.basis[p]));
                if better {
                    best = ratio;
                    leave = Some((i, at_upper));
                }
            }
            return (best.max(0.0), leave);
        }
        // Harris pass 1: relaxed bound
        let mut theta_max = f64::INFINITY;
        for i in 0..self.m {
            if alpha[i].abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[i];
            let rate = -dir * alpha[i];
            let (ratio, _) = bound_ratio(self.x[j], self.lo[j], self.up[j], rate, PRIMAL_TOL);
            theta_max = theta_max.min(ratio);
        }
        if flip <= theta_max {
            return (flip, None);
        }
        if theta_max.is_infinite() {
            return (f64::INFINITY, None);
        }
        // pass 2: largest pivot among candidates within the relaxed step
        let mut leave: Option<(usize, bool)> = None;
        let mut best_piv = 0.0;
        let mut best_ratio = f64::INFINITY;
        for i in 0..self.m {
            if alpha[i].abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[i];
            let rate = -dir * alpha[i];
            let (ratio, at_upper) = bound_ratio(self.x[j], self.lo[j], self.up[j], rate, 0.0);
            if ratio <= theta_max && alpha[i].abs() > best_piv {
                best_piv = alpha[i].abs();
                best_ratio = ratio;
                leave = Some((i, at_upper));
            }
        }
        (best_ratio.max(0.0), leave)
    }

    fn needs_refactor(&self) -> bool {
        self.updates_since_inversion >= REFACTOR_EVERY || self.factor.eta_nnz() > self.factor.nnz() + self.m
    }

    /// Put column `q` at basis position `p`. Returns true when the basis
    /// was refactored.
    fn swap_in(&mut self, q: usize, p: usize) -> bool {
        let mut col = vec![0.0; self.m];
        self.for_col(q, |r, a| col[r] += a);
        let ok = self.factor.update(p, &col);
        let out = self.basis[p];
        self.pos[out] = NOT_BASIC;
        self.basis[p] = q;
        self.pos[q] = p;
        self.updates_since_inversion += 1;
        if !ok || self.needs_refactor() {
            self.reinvert();
            return true;
        }
        false
    }

    fn pivot(&mut self, q: usize, p: usize) {
        if self.swap_in(q, p) {
            self.compute_xb();
        }
        self.compute_pi();
    }

    fn artificial_sum(&self) -> f64 {
        self.phase_one.iter().map(|&j| self.x[j].max(0.0)).sum()
    }

    /// Try to pivot basic artificials (all at zero) out of the basis.
    fn drive_out_artificials(&mut self) {
        for p in 0..self.m {
            let j = self.basis[p];
            if !matches!(self.kinds[j], Kind::Artificial(..)) {
                continue;
            }
            let row = self.btran_unit(p);
            let mut candidate = None;
            let mut best = 1e-7;
            for q in 0..self.total() {
                if self.pos[q] != NOT_BASIC || matches!(self.kinds[q], Kind::Artificial(..)) {
                    continue;
                }
                let mut v = 0.0;
                self.for_col(q, |r, a| v += row[r] * a);
                if v.abs() > best {
                    best = v.abs();
                    candidate = Some(q);
                }
            }
            if let Some(q) = candidate {
                self.pivot(q, p);
            }
        }
    }
}

/// Row-wise copy of the structural matrix.
struct RowMatrix {
    start: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl RowMatrix {
    fn new(form: &CompForm) -> Self {
        let mut start = vec![0usize; form.m + 1];
        for &r in &form.row_idx {
            start[r + 1] += 1;
        }
        for r in 0..form.m {
            start[r + 1] += start[r];
        }
        let mut next = start.clone();
        let nnz = form.row_idx.len();
        let mut col = vec![0; nnz];
        let mut val = vec![0.0; nnz];
        for j in 0..form.n {
            for k in form.col_start[j]..form.col_start[j + 1] {
                let r = form.row_idx[k];
                col[next[r]] = j;
                val[next[r]] = form.vals[k];
                next[r] += 1;
            }
        }
        Self { start, col, val }
    }
}

const COST_PERTURB: f64 = 5e-7;
const BOX: f64 = 1e3;
const DUAL_PIVOT_TOL: f64 = 1e-7;

impl Solver<'_> {
    fn compute_d(&mut self) {
        let mut d = vec![0.0; self.total()];
        for (j, dj) in d.iter_mut().enumerate() {
            if self.pos[j] == NOT_BASIC {
                *dj = self.cost[j] - self.dot_pi(j);
            }
        }
        self.d = d;
    }

    /// `rho' a_j` for every column.
    fn pivot_row(&self, rows: &RowMatrix, rho: &[f64]) -> Vec<f64> {
        let n = self.form.n;
        let mut out = vec![0.0; self.total()];
        for (r, &v) in rho.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for k in rows.start[r]..rows.start[r + 1] {
                out[rows.col[k]] += v * rows.val[k];
            }
            out[n + r] = -v;
        }
        out
    }

    fn at_lower(&self, j: usize) -> bool {
        self.lo[j].is_finite() && self.x[j] <= self.lo[j] + PRIMAL_TOL
    }

    fn at_upper(&self, j: usize) -> bool {
        self.up[j].is_finite() && self.x[j] >= self.up[j] - PRIMAL_TOL
    }

    /// Flip bounded nonbasics whose reduced cost has the wrong sign and
    /// shift the cost of the others.
    fn fix_duals(&mut self) {
        let mut flipped = false;
        for j in 0..self.total() {
            if self.pos[j] != NOT_BASIC || self.lo[j] == self.up[j] {
                continue;
            }
            let d = self.d[j];
            let (lo, up) = (self.at_lower(j), self.at_upper(j));
            if lo && d < -DUAL_TOL {
                if self.up[j].is_finite() {
                    self.x[j] = self.up[j];
                    flipped = true;
                } else {
                    self.cost[j] -= d;
                    self.d[j] = 0.0;
                }
            } else if up && d > DUAL_TOL {
                if self.lo[j].is_finite() {
                    self.x[j] = self.lo[j];
                    flipped = true;
                } else {
                    self.cost[j] -= d;
                    self.d[j] = 0.0;
                }
            } else if !lo && !up && d.abs() > DUAL_TOL {
                self.cost[j] -= d;
                self.d[j] = 0.0;
            }
        }
        if flipped {
            self.compute_xb();
        }
    }

    /// Pivot free structural columns into the basis in place of logicals,
    /// preferring rows with a fixed activity.
    fn crash_free_columns(&mut self) {
        let n = self.form.n;
        for j in 0..n {
            if self.lo[j].is_finite() || self.up[j].is_finite() || self.pos[j] != NOT_BASIC {
                continue;
            }
            let alpha = self.ftran(j);
            let big = alpha.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let mut best = None;
            let mut best_score = 0.0;
            for (p, &a) in alpha.iter().enumerate() {
                let k = self.basis[p];
                if k < n || a.abs() < 0.1 * big || a.abs() <= DUAL_PIVOT_TOL {
                    continue;
                }
                let score = a.abs() * if self.lo[k] == self.up[k] { 4.0 } else { 1.0 };
                if score > best_score {
                    best_score = score;
                    best = Some(p);
                }
            }
            let Some(p) = best else { continue };
            let out = self.basis[p];
            self.x[out] = snap_to_bound(self.x[out], self.lo[out], self.up[out]);
            self.swap_in(j, p);
        }
        self.compute_xb();
    }

    fn dual_refresh(&mut self, force: bool) {
        if force || self.needs_refactor() {
            self.reinvert();
        }
        self.compute_xb();
        self.compute_pi();
        self.compute_d();
        self.fix_duals();
    }

    /// Most infeasible basic variable by steepest-edge score, with the
    /// signed distance to the violated bound.
    fn dual_price(&self) -> Option<(usize, f64)> {
        let mut best = None;
        let mut best_score = 0.0;
        for (i, &j) in self.basis.iter().enumerate() {
            let x = self.x[j];
            let delta = if x < self.lo[j] - PRIMAL_TOL {
                x - self.lo[j]
            } else if x > self.up[j] + PRIMAL_TOL {
                x - self.up[j]
            } else {
                continue;
            };
            let score = delta * delta / self.dse[i];
            if score > best_score {
                best_score = score;
                best = Some((i, delta));
            }
        }
        best
    }

    /// Step bound for nonbasic `j` whose pivot-row entry times the
    /// direction is `a`.
    fn dual_ratio_of(&self, j: usize, a: f64, tol: f64) -> Option<f64> {
        let d = self.d[j];
        match (self.at_lower(j), self.at_upper(j)) {
            (true, false) => (a > 0.0).then(|| ((d + tol) / a).max(0.0)),
            (false, true) => (a < 0.0).then(|| ((d - tol) / a).max(0.0)),
            (false, false) => Some(((d.abs() + tol) / a.abs()).max(0.0)),
            (true, true) => None,
        }
    }

    fn dual_ratio(&self, row: &[f64], s: f64) -> Option<usize> {
        let mut theta_max = f64::INFINITY;
        for j in 0..self.total() {
            if self.pos[j] != NOT_BASIC || self.lo[j] == self.up[j] || row[j].abs() <= DUAL_PIVOT_TOL {
                continue;
            }
            if let Some(t) = self.dual_ratio_of(j, s * row[j], DUAL_TOL) {
                theta_max = theta_max.min(t);
            }
        }
        if theta_max.is_infinite() {
            return None;
        }
        let mut best = None;
        let mut best_piv = 0.0;
        for j in 0..self.total() {
            if self.pos[j] != NOT_BASIC || self.lo[j] == self.up[j] || row[j].abs() <= DUAL_PIVOT_TOL {
                continue;
            }
            if let Some(t) = self.dual_ratio_of(j, s * row[j], 0.0) {
                if t <= theta_max && row[j].abs() > best_piv {
                    best_piv = row[j].abs();
                    best = Some(j);
                }
            }
        }
        best
    }

    fn dual_run(&mut self, rows: &RowMatrix) -> Outcome {
        self.dse = vec![1.0; self.m];
        self.compute_pi();
        self.compute_d();
        self.fix_duals();
        let mut since_recompute = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::Stalled;
            }
            if since_recompute >= RECOMPUTE_EVERY {
                since_recompute = 0;
                self.dual_refresh(false);
            }
            let Some((r, delta)) = self.dual_price() else {
                if since_recompute == 0 && self.updates_since_inversion == 0 {
                    return Outcome::Optimal;
                }
                self.dual_refresh(true);
                since_recompute = 0;
                if self.dual_price().is_none() {
                    return Outcome::Optimal;
                }
                continue;
            };
            let rho = self.btran_unit(r);
            let row = self.pivot_row(rows, &rho);
            let s = delta.signum();
            let Some(q) = self.dual_ratio(&row, s) else {
                if self.updates_since_inversion == 0 && since_recompute == 0 {
                    return Outcome::Infeasible;
                }
                self.dual_refresh(true);
                since_recompute = 0;
                continue;
            };
            let alpha = self.ftran(q);
            let ar = alpha[r];
            if (ar - row[q]).abs() > 1e-7 * (1.0 + ar.abs()) && self.updates_since_inversion > 0 {
                self.dual_refresh(true);
                since_recompute = 0;
                continue;
            }
            self.iterations += 1;
            since_recompute += 1;
            if self.iterations % 1000 == 0 {
                let infeas: f64 = self
                    .basis
                    .iter()
                    .map(|&j| (self.lo[j] - self.x[j]).max(self.x[j] - self.up[j]).max(0.0))
                    .sum();
                log::trace!("dual iteration {}: primal infeasibility {infeas:e}", self.iterations);
            }
            let mut theta_d = self.d[q] / ar;
            if theta_d * s < 0.0 {
                self.cost[q] -= self.d[q];
                self.d[q] = 0.0;
                theta_d = 0.0;
            }
            if theta_d != 0.0 {
                for j in 0..self.total() {
                    if self.pos[j] == NOT_BASIC && row[j] != 0.0 {
                        self.d[j] -= theta_d * row[j];
                    }
                }
            }
            let leaving = self.basis[r];
            let bound = if delta < 0.0 { self.lo[leaving] } else { self.up[leaving] };
            let t = (self.x[leaving] - bound) / ar;
            self.x[q] += t;
            for (i, &j) in self.basis.iter().enumerate() {
                if alpha[i] != 0.0 {
                    self.x[j] -= alpha[i] * t;
                }
            }
            self.x[leaving] = bound;
            let mut rho_pos = rho.clone();
            let rho_norm: f64 = rho.iter().map(|v| v * v).sum();
            let tau = self.factor.ftran(&mut rho_pos);
            for i in 0..self.m {
                if i == r || alpha[i] == 0.0 {
                    continue;
                }
                let k = alpha[i] / ar;
                self.dse[i] = (self.dse[i] - 2.0 * k * tau[i] + k * k * rho_norm).max(k * k).max(1e-8);
            }
            self.dse[r] = (rho_norm / (ar * ar)).max(1e-8);
            let refactored = self.swap_in(q, r);
            self.d[q] = 0.0;
            self.d[leaving] = -theta_d;
            if refactored {
                self.compute_xb();
            }
            self.fix_duals();
        }
    }
}

/// Cheap deterministic value in `[0, 1)` for column `j`.
fn jitter(j: usize) -> f64 {
    let mut z = (j as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Dual simplex on perturbed costs, then a primal cleanup on the true
/// costs. A dual feasible start comes from the same method applied to an
/// auxiliary problem in which every bound is replaced by a small box.
fn solve_dual(form: &CompForm) -> SimplexResult {
    let mut s = Solver::new(form, false);
    let total = s.total();
    for j in 0..form.n {
        let (lo, up, c) = (form.lower[j], form.upper[j], form.cost[j]);
        let shift = COST_PERTURB * (1.0 + c.abs()) * (0.5 + jitter(j));
        s.cost[j] = if lo == up {
            c
        } else if c > 0.0 || (c == 0.0 && lo.is_finite()) {
            c + shift
        } else if c < 0.0 || up.is_finite() {
            c - shift
        } else {
            0.0
        };
    }
    s.crash_free_columns();
    let (lo, up) = (s.lo.clone(), s.up.clone());
    let rows = RowMatrix::new(form);
    s.compute_pi();
    s.compute_d();
    // columns that cannot sit at a finite bound with the right reduced
    // cost get a temporary box on their open side
    let mut boxed = Vec::new();
    for j in 0..total {
        let d = s.d[j];
        if s.pos[j] != NOT_BASIC || d.abs() <= DUAL_TOL || (lo[j].is_finite() && up[j].is_finite()) {
            continue;
        }
        if d > 0.0 && !lo[j].is_finite() {
            let base = if up[j].is_finite() { up[j] } else { 0.0 };
            s.lo[j] = base - BOX * (1.0 + base.abs());
            boxed.push(j);
        } else if d < 0.0 && !up[j].is_finite() {
            let base = if lo[j].is_finite() { lo[j] } else { 0.0 };
            s.up[j] = base + BOX * (1.0 + base.abs());
            boxed.push(j);
        }
    }
    for j in 0..total {
        if s.pos[j] != NOT_BASIC {
            continue;
        }
        s.x[j] = match (s.lo[j].is_finite(), s.up[j].is_finite()) {
            (true, true) => {
                if s.d[j] >= 0.0 {
                    s.lo[j]
                } else {
                    s.up[j]
                }
            }
            (true, false) => s.lo[j],
            (false, true) => s.up[j],
            (false, false) => 0.0,
        };
    }
    s.compute_xb();
    let outcome = s.dual_run(&rows);
    let dual_iterations = s.iterations;
    if outcome == Outcome::Infeasible && !boxed.is_empty() {
        return finish(s, Outcome::Stalled);
    }
    if outcome != Outcome::Optimal {
        return finish(s, outcome);
    }
    s.lo = lo;
    s.up = up;
    for j in 0..total {
        s.cost[j] = match s.kinds[j] {
            Kind::Structural => form.cost[j],
            _ => 0.0,
        };
    }
    s.degenerate_run = 0;
    let outcome = s.run();
    log::debug!(
        "dual simplex: {} boxed, {dual_iterations} dual, {} cleanup iterations",
        boxed.len(),
        s.iterations - dual_iterations
    );
    finish(s, outcome)
}

fn initial_value(lo: f64, up: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if up.is_finite() {
        up
    } else {
        0.0
    }
}

fn snap_to_bound(v: f64, lo: f64, up: f64) -> f64 {
    match (lo.is_finite(), up.is_finite()) {
        (true, true) => {
            if (v - lo).abs() <= (up - v).abs() {
                lo
            } else {
                up
            }
        }
        (true, false) => lo,
        (false, true) => up,
        (false, false) => 0.0,
    }
}

/// Step until a basic variable moving at `rate` reaches a bound. `slack`
/// relaxes the bound (Harris).
#[inline]
fn bound_ratio(x: f64, lo: f64, up: f64, rate: f64, slack: f64) -> (f64, bool) {
    if rate < 0.0 {
        if lo.is_finite() {
            (((x - lo) + slack).max(0.0) / -rate, false)
        } else {
            (f64::INFINITY, false)
        }
    } else if up.is_finite() {
        (((up - x) + slack).max(0.0) / rate, true)
    } else {
        (f64::INFINITY, true)
    }
}

pub(crate) fn solve(form: &CompForm) -> SimplexResult {
    let dual = solve_dual(form);
    if dual.outcome != Outcome::Stalled {
        return dual;
    }
    log::debug!("dual simplex ended {:?}; falling back to two-phase primal", dual.outcome);
    let mut res = solve_primal(form);
    res.iterations += dual.iterations;
    res
}

fn solve_primal(form: &CompForm) -> SimplexResult {
    let mut s = Solver::new(form, true);
    let has_art = s.kinds.iter().any(|k| matches!(k, Kind::Artificial(..)));
    if has_art {
        for j in 0..s.total() {
            s.cost[j] = if matches!(s.kinds[j], Kind::Artificial(..)) { 1.0 } else { 0.0 };
        }
        s.phase_one = (0..s.total()).filter(|&j| matches!(s.kinds[j], Kind::Artificial(..))).collect();
        let outcome = s.run();
        if outcome == Outcome::Stalled {
            return finish(s, Outcome::Stalled);
        }
        s.refresh();
        let infeasible = s.artificial_sum() > PHASE1_TOL;
        s.phase_one.clear();
        if infeasible {
            return finish(s, Outcome::Infeasible);
        }
        for j in 0..s.total() {
            if matches!(s.kinds[j], Kind::Artificial(..)) {
                s.lo[j] = 0.0;
                s.up[j] = 0.0;
                if s.pos[j] == NOT_BASIC {
                    s.x[j] = 0.0;
                }
            }
        }
        s.drive_out_artificials();
        s.degenerate_run = 0;
    }
    for j in 0..s.total() {
        s.cost[j] = match s.kinds[j] {
            Kind::Structural => form.cost[j],
            _ => 0.0,
        };
    }
    let outcome = s.run();
    finish(s, outcome)
}

fn finish(mut s: Solver<'_>, outcome: Outcome) -> SimplexResult {
    if outcome == Outcome::Optimal {
        s.compute_xb();
        s.compute_pi();
    }
    let n = s.form.n;
    log::debug!(
        "simplex {}x{}: {:?} after {} iterations",
        s.m,
        n,
        outcome,
        s.iterations
    );
    SimplexResult {
        outcome,
        x: s.x[..n].to_vec(),
        y: s.pi.clone(),
        iterations: s.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(m: usize, cols: &[Vec<f64>]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut start = vec![0];
        let mut idx = Vec::new();
        let mut vals = Vec::new();
        for c in cols {
            for r in 0..m {
                if c[r] != 0.0 {
                    idx.push(r);
                    vals.push(c[r]);
                }
            }
            start.push(idx.len());
        }
        (start, idx, vals)
    }

    #[test]
    fn bounded_box_problem() {
        // min -x - y  s.t. x + y <= 1.5, 0 <= x,y <= 1
        let (col_start, row_idx, vals) = dense(1, &[vec![1.0], vec![1.0]]);
        let form = CompForm {
            m: 1,
            n: 2,
            col_start,
            row_idx,
            vals,
            cost: vec![-1.0, -1.0],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            row_lower: vec![f64::NEG_INFINITY],
            row_upper: vec![1.5],
        };
        let res = solve(&form);
        assert_eq!(res.outcome, Outcome::Optimal);
        assert!((res.x[0] + res.x[1] - 1.5).abs() < 1e-9);
        assert!((res.y[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn phase_one_detects_infeasibility() {
        // x >= 2 and x <= 1 expressed as two rows
        let (col_start, row_idx, vals) = dense(2, &[vec![1.0, 1.0]]);
        let form = CompForm {
            m: 2,
            n: 1,
            col_start,
            row_idx,
            vals,
            cost: vec![1.0],
            lower: vec![f64::NEG_INFINITY],
            upper: vec![f64::INFINITY],
            row_lower: vec![2.0, f64::NEG_INFINITY],
            row_upper: vec![f64::INFINITY, 1.0],
        };
        assert_eq!(solve(&form).outcome, Outcome::Infeasible);
    }
}
