//! The decision polyhedron `X_T = {(x, T) : A x + B T <= c}`, the bilinear
//! program over it, a small-instance exact oracle, and the VaR integer
//! program.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distribution::{validate_levels, validate_probs};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, Relation, Status, VarId};
use crate::programs;

/// Largest scenario count accepted by [`solve_exact_small`].
pub const EXACT_MAX_SCENARIOS: usize = 14;

/// `{(x, T) : A x + B T <= c}` with `x` of length `k` and `T` of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<f64>,
    x_names: Vec<String>,
    k: usize,
    n: usize,
    /// Row nonzeros over the stacked vector `(x, T)`.
    sparse: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FeasibleSetFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    c: Vec<f64>,
    #[serde(default)]
    names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
}

/// Variable handles created by [`FeasibleSet::add_to`].
#[derive(Debug, Clone)]
pub(crate) struct XtVars {
    pub x: Vec<VarId>,
    pub t: Vec<VarId>,
}

impl XtVars {
    pub fn stacked(&self, col: usize) -> VarId {
        if col < self.x.len() {
            self.x[col]
        } else {
            self.t[col - self.x.len()]
        }
    }
}

impl FeasibleSet {
    /// Build and check non-emptiness with a feasibility LP.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<f64>, x_names: Vec<String>) -> Result<Self> {
        let fs = Self::unchecked(a, b, c, x_names)?;
        let mut lp = LinearProgram::minimize();
        fs.add_to(&mut lp);
        lp.debug_dump("feasible_set");
        let sol = lp::solve_lp(&lp).map_err(|e| Error::lp("feasible set", e))?;
        match sol.status {
            Status::Optimal => Ok(fs),
            Status::Infeasible => Err(Error::validation("feasible set is empty")),
            status => Err(Error::solver("feasible set", status)),
        }
    }

    fn unchecked(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<f64>, x_names: Vec<String>) -> Result<Self> {
        let l = c.len();
        if a.len() != l || b.len() != l {
            return Err(Error::validation(format!(
                "A has {} rows, B has {} rows, c has {} entries",
                a.len(),
                b.len(),
                l
            )));
        }
        if l == 0 {
            return Err(Error::validation("feasible set needs at least one row"));
        }
        let k = a[0].len();
        let n = b[0].len();
        if n == 0 {
            return Err(Error::validation("B must have at least one column"));
        }
        if a.iter().any(|r| r.len() != k) || b.iter().any(|r| r.len() != n) {
            return Err(Error::validation("ragged A or B matrix"));
        }
        let all = a.iter().flatten().chain(b.iter().flatten()).chain(&c);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite entry in A, B or c"));
        }
        let x_names = if x_names.is_empty() {
            (0..k).map(|i| format!("x_{i}")).collect()
        } else if x_names.len() == k {
            x_names
        } else {
            return Err(Error::validation(format!("{} names for {} x-variables", x_names.len(), k)));
        };
        let sparse = (0..l)
            .map(|r| {
                let ax = a[r].iter().enumerate().map(|(j, &v)| (j, v));
                let bt = b[r].iter().enumerate().map(|(i, &v)| (k + i, v));
                ax.chain(bt).filter(|&(_, v)| v != 0.0).collect()
            })
            .collect();
        Ok(Self {
            a,
            b,
            c,
            x_names,
            k,
            n,
            sparse,
        })
    }

    /// `A x + B T <= c` with `T` pinned to `values` (no `x`).
    pub fn fixed(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut b = Vec::with_capacity(2 * n);
        let mut c = Vec::with_capacity(2 * n);
        for (i, &v) in values.iter().enumerate() {
            let mut up = vec![0.0; n];
            up[i] = 1.0;
            let mut down = vec![0.0; n];
            down[i] = -1.0;
            b.push(up);
            c.push(v);
            b.push(down);
            c.push(-v);
        }
        Self::new(vec![Vec::new(); 2 * n], b, c, Vec::new())
    }

    /// Parse the JSON file format; `probs` is returned when present.
    pub fn from_json_str(text: &str) -> Result<(Self, Option<Vec<f64>>)> {
        let raw: FeasibleSetFile = serde_json::from_str(text)?;
        let fs = Self::new(raw.a, raw.b, raw.c, raw.names)?;
        Ok((fs, raw.probs))
    }

    pub fn from_json_path(path: &Path) -> Result<(Self, Option<Vec<f64>>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self, probs: Option<&[f64]>) -> Result<String> {
        let raw = FeasibleSetFile {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            names: self.x_names.clone(),
            probs: probs.map(<[f64]>::to_vec),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    pub fn num_rows(&self) -> usize {
        self.c.len()
    }

    /// Dimension of `x`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of scenarios (dimension of `T`).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    /// Nonzeros of row `r` over the stacked vector `(x, T)`.
    pub fn row_terms(&self, r: usize) -> &[(usize, f64)] {
        &self.sparse[r]
    }

    /// Largest violation of `A x + B T <= c`, each row scaled by its magnitude.
    pub fn max_violation(&self, x: &[f64], t: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.num_rows() {
            let mut act = 0.0;
            let mut mag = self.c[r].abs();
            for &(j, a) in &self.sparse[r] {
                let v = if j < self.k { x[j] } else { t[j - self.k] };
                act += a * v;
                mag = mag.max((a * v).abs());
            }
            worst = worst.max((act - self.c[r]) / mag.max(1.0));
        }
        worst
    }

    /// Add free `x` and `T` variables and the rows of `X_T` to `lp`.
    pub(crate) fn add_to(&self, lp: &mut LinearProgram) -> XtVars {
        let x = self.x_names.iter().map(|name| lp.add_free_var(name.as_str())).collect();
        let t = (0..self.n).map(|i| lp.add_free_var(format!("T_{i}"))).collect();
        let vars = XtVars { x, t };
        for r in 0..self.num_rows() {
            let terms = self.sparse[r].iter().map(|&(j, a)| (vars.stacked(j), a));
            lp.add_constraint(format!("XT_{r}"), terms, Relation::Le, self.c[r]);
        }
        vars
    }

    /// Lower and upper bound of each `T_i` over the set (infinite when
    /// unbounded).
    pub fn t_bounds(&self) -> Result<Vec<(f64, f64)>> {
        let mut lp = LinearProgram::minimize();
        let vars = self.add_to(&mut lp);
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut bound = [0.0; 2];
            for (slot, dir) in [(0, 1.0), (1, -1.0)] {
                for &t in &vars.t {
                    lp.set_objective(t, 0.0);
                }
                lp.set_objective(vars.t[i], dir);
                let sol = lp::solve_lp(&lp).map_err(|e| Error::lp("T bounds", e))?;
                bound[slot] = match sol.status {
                    Status::Optimal => sol.objective * dir,
                    Status::Unbounded => dir * f64::NEG_INFINITY,
                    status => return Err(Error::solver("T bounds", status)),
                };
            }
            out.push((bound[0], bound[1]));
        }
        Ok(out)
    }
}

/// The bilinear program: minimize the α–γ expectation of `T` over `X_T`.
#[derive(Debug, Clone)]
pub struct BilinearProgram<'a> {
    pub fs: &'a FeasibleSet,
    pub probs: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
}

impl<'a> BilinearProgram<'a> {
    pub fn new(fs: &'a FeasibleSet, probs: &[f64], alpha: f64, gamma: f64) -> Result<Self> {
        if probs.len() != fs.n() {
            return Err(Error::validation(format!(
                "{} probabilities for {} scenarios",
                probs.len(),
                fs.n()
            )));
        }
        validate_probs(probs)?;
        validate_levels(alpha, gamma)?;
        Ok(Self {
            fs,
            probs: probs.to_vec(),
            alpha,
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.fs.n()
    }

    /// Same instance at other levels.
    pub fn with_levels(&self, alpha: f64, gamma: f64) -> Result<Self> {
        Self::new(self.fs, &self.probs, alpha, gamma)
    }

    /// Whether `w'` lies in `{w' in [0,1]^n : sum w' p = 1 - gamma}` to `tol`.
    pub fn in_w_prime(&self, wprime: &[f64], tol: f64) -> bool {
        if wprime.len() != self.n() {
            return false;
        }
        let mass: f64 = wprime.iter().zip(&self.probs).map(|(w, p)| w * p).sum();
        wprime.iter().all(|&w| w >= -tol && w <= 1.0 + tol) && (mass - (1.0 - self.gamma)).abs() <= tol
    }
}

/// A point `(x, T, s, theta, w')` of the bilinear program.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearPoint {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub s: f64,
    pub theta: Vec<f64>,
    pub wprime: Vec<f64>,
}

/// `(1/(γ−α)) [(1−α)s + Σθ_i − Σ T_i p_i w'_i]`, no feasibility check.
pub fn evaluate_objective(bp: &BilinearProgram<'_>, point: &BilinearPoint) -> Result<f64> {
    let n = bp.n();
    if point.x.len() != bp.fs.k() || point.t.len() != n || point.theta.len() != n || point.wprime.len() != n {
        return Err(Error::validation("point dimensions do not match the program"));
    }
    let tail: f64 = (0..n).map(|i| point.t[i] * bp.probs[i] * point.wprime[i]).sum();
    let theta: f64 = point.theta.iter().sum();
    Ok(((1.0 - bp.alpha) * point.s + theta - tail) / (bp.gamma - bp.alpha))
}

/// Exact optimum of the bilinear program and its minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub value: f64,
    pub wprime: Vec<f64>,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// Number of `W'` vertices examined.
    pub vertices: usize,
}

/// Vertices of `{w' in [0,1]^n : sum w' p = mass}`: a set of ones plus at
/// most one fractional coordinate.
pub fn w_prime_vertices(probs: &[f64], mass: f64) -> Vec<Vec<f64>> {
    const TOL: f64 = 1e-12;
    let n = probs.len();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + probs[i];
    }
    let max_p = probs.iter().copied().fold(0.0, f64::max);
    let mut ones = vec![false; n];
    #[allow(clippy::too_many_arguments)]
    fn walk(
        i: usize,
        used: f64,
        max_p: f64,
        probs: &[f64],
        mass: f64,
        suffix: &[f64],
        ones: &mut Vec<bool>,
        out: &mut Vec<Vec<f64>>,
        seen: &mut HashSet<Vec<u64>>,
    ) {
        let n = probs.len();
        if used > mass + TOL {
            return;
        }
        if i == n {
            let rest = mass - used;
            let mut emit = |w: Vec<f64>| {
                let key: Vec<u64> = w.iter().map(|v| v.to_bits()).collect();
                if seen.insert(key) {
                    out.push(w);
                }
            };
            let base: Vec<f64> = ones.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            if rest.abs() <= TOL {
                emit(base);
            } else {
                for j in 0..n {
                    if !ones[j] && probs[j] > rest + TOL {
                        let mut w = base.clone();
                        w[j] = rest / probs[j];
                        emit(w);
                    }
                }
            }
            return;
        }
        // remaining atoms plus one fractional coordinate must reach the mass
        if used + suffix[i] + max_p < mass - TOL {
            return;
        }
        ones[i] = true;
        walk(i + 1, used + probs[i], max_p, probs, mass, suffix, ones, out, seen);
        ones[i] = false;
        walk(i + 1, used, max_p, probs, mass, suffix, ones, out, seen);
    }
    walk(0, 0.0, max_p, probs, mass, &suffix, &mut ones, &mut out, &mut seen);
    out
}

/// `ν*` by enumerating the vertices of `W'` and solving the LP in
/// `(x, T, s, θ)` at each one.
pub fn solve_exact_small(bp: &BilinearProgram<'_>) -> Result<ExactSolution> {
    let n = bp.n();
    if n > EXACT_MAX_SCENARIOS {
        return Err(Error::validation(format!(
            "exact oracle supports at most {EXACT_MAX_SCENARIOS} scenarios, got {n}"
        )));
    }
    let vertices = w_prime_vertices(&bp.probs, 1.0 - bp.gamma);
    let mut best: Option<ExactSolution> = None;
    for w in &vertices {
        let r = programs::find_xt(bp, w)?;
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(ExactSolution {
                value: r.value,
                wprime: w.clone(),
                x: r.x,
                t: r.t,
                vertices: 0,
            });
        }
    }
    let mut best = best.ok_or_else(|| Error::Internal("no vertex of W' found".into()))?;
    best.vertices = vertices.len();
    Ok(best)
}

/// Big-M choice for the VaR integer program.
#[derive(Debug, Clone, PartialEq)]
pub enum BigM {
    Uniform(f64),
    /// `M_i` = upper bound of `T_i` minus the lower bound of `κ`.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarIpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    pub nodes: usize,
}

/// `min κ  s.t.  Σ z_i p_i >= γ,  T_i <= κ + M_i (1 − z_i)`, `z` binary
/// (or relaxed to `[0, 1]`), with `κ` bounded below by the smallest
/// attainable `T_i`.
pub fn var_ip(fs: &FeasibleSet, probs: &[f64], gamma: f64, big_m: BigM, relax: bool) -> Result<VarIpSolution> {
    let n = fs.n();
    if probs.len() != n {
        return Err(Error::validation(format!("{} probabilities for {n} scenarios", probs.len())));
    }
    validate_probs(probs)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::validation(format!("gamma = {gamma} outside (0, 1]")));
    }
    let bounds = fs.t_bounds()?;
    let kappa_lb = bounds.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let ms: Vec<f64> = match big_m {
        BigM::Uniform(m) => {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::validation(format!("big-M must be positive, got {m}")));
            }
            vec![m; n]
        }
        BigM::Auto => {
            if !kappa_lb.is_finite() {
                return Err(Error::validation("cannot derive big-M: some T_i is unbounded below"));
            }
            bounds
                .iter()
                .map(|&(_, ub)| {
                    if ub.is_finite() {
                        Ok((ub - kappa_lb).max(1e-9))
                    } else {
                        Err(Error::validation("cannot derive big-M: some T_i is unbounded above"))
                    }
                })
                .collect::<Result<_>>()?
        }
    };

    let mut lp = LinearProgram::minimize();
    let vars = fs.add_to(&mut lp);
    let kappa = lp.add_var("kappa", kappa_lb, f64::INFINITY);
    lp.set_objective(kappa, 1.0);
    let z: Vec<VarId> = (0..n)
        .map(|i| {
            if relax {
                lp.add_var(format!("z_{i}"), 0.0, 1.0)
            } else {
                lp.add_binary(format!("z_{i}"))
            }
        })
        .collect();
    lp.add_constraint("mass", z.iter().zip(probs).map(|(&v, &p)| (v, p)), Relation::Ge, gamma);
    for i in 0..n {
        lp.add_constraint(
            format!("bigM_{i}"),
            [(vars.t[i], 1.0), (kappa, -1.0), (z[i], ms[i])],
            Relation::Le,
            ms[i],
        );
    }
    lp.debug_dump(if relax { "var_ip_relaxed" } else { "var_ip" });
    let stage = if relax { "VaR LP relaxation" } else { "VaR IP" };
    let sol = if relax { lp::solve_lp(&lp) } else { lp::solve_mip(&lp) }.map_err(|e| Error::lp(stage, e))?;
    if sol.status != Status::Optimal {
        return Err(Error::solver(stage, sol.status));
    }
    Ok(VarIpSolution {
        value: sol.objective,
        x: vars.x.iter().map(|&v| sol.value(v)).collect(),
        t: vars.t.iter().map(|&v| sol.value(v)).collect(),
        z: z.iter().map(|&v| sol.value(v)).collect(),
        nodes: sol.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `T_1 = x`, `T_2 = 1 − x`, `x ∈ [0, 1]`.
    pub(crate) fn seesaw() -> FeasibleSet {
        let a = vec![vec![-1.0], vec![1.0], vec![1.0], vec![-1.0], vec![1.0], vec![-1.0]];
        let b = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        ];
        let c = vec![0.0, 0.0, 1.0, -1.0, 1.0, 0.0];
        FeasibleSet::new(a, b, c, vec!["x".into()]).unwrap()
    }

    #[test]
    fn objective_arithmetic() {
        let fs = FeasibleSet::fixed(&[1.0, 3.0]).unwrap();
        let bp = BilinearProgram::new(&fs, &[0.5, 0.5], 0.5, 0.8).unwrap();
        let point = BilinearPoint {
            x: vec![],
            t: vec![1.0, 3.0],
            s: 3.0,
            theta: vec![0.0, 0.0],
            wprime: vec![0.0, 0.4],
        };
        assert!((evaluate_objective(&bp, &point).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_oracle_examples() {
        let fs = FeasibleSet::fixed(&[1.0, 3.0]).unwrap();
        let bp = BilinearProgram::new(&fs, &[0.5, 0.5], 0.5, 0.8).unwrap();
        assert!((solve_exact_small(&bp).unwrap().value - 3.0).abs() < 1e-9);

        let fs = seesaw();
        let bp = BilinearProgram::new(&fs, &[0.5, 0.5], 0.5, 0.8).unwrap();
        let sol = solve_exact_small(&bp).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-9);
        assert!((sol.x[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn vertices_have_one_fractional_coordinate() {
        let probs = [0.25, 0.25, 0.25, 0.25];
        let v = w_prime_vertices(&probs, 0.3);
        // one full atom plus a fifth of another: 4 * 3 choices
        assert_eq!(v.len(), 12);
        for w in &v {
            let frac = w.iter().filter(|&&x| x > 0.0 && x < 1.0).count();
            assert!(frac <= 1);
            let mass: f64 = w.iter().zip(&probs).map(|(a, b)| a * b).sum();
            assert!((mass - 0.3).abs() < 1e-12);
        }
        assert_eq!(w_prime_vertices(&probs, 0.0), vec![vec![0.0; 4]]);
    }

    #[test]
    fn var_ip_examples() {
        let fs = FeasibleSet::fixed(&[0.1, 0.4]).unwrap();
        let exact = var_ip(&fs, &[0.6, 0.4], 0.7, BigM::Uniform(1.0), false).unwrap();
        assert!((exact.value - 0.4).abs() < 1e-9);
        let relaxed = var_ip(&fs, &[0.6, 0.4], 0.7, BigM::Uniform(1.0), true).unwrap();
        assert!((relaxed.value - 0.1).abs() < 1e-9);

        let fs = seesaw();
        let sol = var_ip(&fs, &[0.5, 0.5], 0.75, BigM::Uniform(1.0), false).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-9);
        let auto = var_ip(&fs, &[0.5, 0.5], 0.75, BigM::Auto, false).unwrap();
        assert!((auto.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn empty_set_is_rejected() {
        let err = FeasibleSet::new(vec![vec![], vec![]], vec![vec![1.0], vec![-1.0]], vec![0.0, -1.0], vec![]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn json_round_trip() {
        let fs = seesaw();
        let text = fs.to_json_string(Some(&[0.5, 0.5])).unwrap();
        let (back, probs) = FeasibleSet::from_json_str(&text).unwrap();
        assert_eq!(back, fs);
        assert_eq!(probs, Some(vec![0.5, 0.5]));
    }
}
