#![allow(dead_code)]

use agrisk::lp::{LinearProgram, Relation, Sense};
use agrisk::model::FeasibleSet;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive weights normalized to one.
pub fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Values on a coarse grid so that ties occur now and then.
pub fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.3) {
                rng.random_range(0..6) as f64
            } else {
                rng.random_range(-10.0..10.0)
            }
        })
        .collect()
}

/// `x in [0,1]^k`, `T_i >= g_i x + h_i`, `0 <= T_i <= 10`, and at least half
/// a unit of total allocation.
pub fn random_feasible_set(rng: &mut ChaCha8Rng, k: usize, n: usize) -> FeasibleSet {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    let mut row = |ax: Vec<f64>, bt: Vec<f64>, rhs: f64| {
        a.push(ax);
        b.push(bt);
        c.push(rhs);
    };
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        row(e.clone(), vec![0.0; n], 1.0);
        e[j] = -1.0;
        row(e, vec![0.0; n], 0.0);
    }
    if k > 0 {
        row(vec![-1.0; k], vec![0.0; n], -0.5);
    }
    for i in 0..n {
        let g: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let h = rng.random_range(0.0..4.0);
        let mut bt = vec![0.0; n];
        bt[i] = -1.0;
        row(g, bt.clone(), -h);
        bt[i] = 1.0;
        row(vec![0.0; k], bt, 10.0);
    }
    FeasibleSet::new(a, b, c, vec![]).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Dense copy of a model, in minimization form.
#[derive(Debug, Clone)]
pub struct Dense {
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
    pub c: Vec<f64>,
    pub offset: f64,
    pub binary: Vec<bool>,
}

impl Dense {
    pub fn from_lp(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let sign = if lp.sense() == Sense::Maximize { -1.0 } else { 1.0 };
        let rows = lp
            .rows()
            .iter()
            .map(|r| {
                let mut a = vec![0.0; n];
                for &(j, v) in &r.coeffs {
                    a[j] += v;
                }
                (a, r.relation, r.rhs)
            })
            .collect();
        Dense {
            rows,
            lo: lp.vars().iter().map(|v| v.lower).collect(),
            up: lp.vars().iter().map(|v| v.upper).collect(),
            c: lp.objective().iter().map(|v| sign * v).collect(),
            offset: sign * lp.offset(),
            binary: lp.vars().iter().map(|v| v.binary).collect(),
        }
    }

    fn feasible(&self, x: &[f64]) -> bool {
        for (j, &v) in x.iter().enumerate() {
            if v < self.lo[j] - 1e-9 * (1.0 + self.lo[j].abs()) || v > self.up[j] + 1e-9 * (1.0 + self.up[j].abs()) {
                return false;
            }
        }
        self.rows.iter().all(|(a, rel, rhs)| {
            let act: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
            let scale: f64 = 1.0 + rhs.abs() + a.iter().zip(x).map(|(p, q)| (p * q).abs()).sum::<f64>();
            let tol = 1e-9 * scale;
            match rel {
                Relation::Le => act <= rhs + tol,
                Relation::Ge => act >= rhs - tol,
                Relation::Eq => (act - rhs).abs() <= tol,
            }
        })
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.offset + self.c.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
    }

    /// Best vertex with infinite bounds replaced by `±big`.
    fn best_vertex(&self, big: f64) -> Option<f64> {
        let n = self.c.len();
        let mut boxed = self.clone();
        for j in 0..n {
            boxed.lo[j] = boxed.lo[j].max(-big);
            boxed.up[j] = boxed.up[j].min(big);
        }
        if n == 0 {
            return boxed.feasible(&[]).then_some(boxed.offset);
        }
        let mut planes: Vec<(Vec<f64>, f64)> = boxed.rows.iter().map(|(a, _, r)| (a.clone(), *r)).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            planes.push((e.clone(), boxed.lo[j]));
            planes.push((e, boxed.up[j]));
        }
        let mut best: Option<f64> = None;
        let mut pick = Vec::with_capacity(n);
        combos(planes.len(), n, 0, &mut pick, &mut |idx| {
            let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
            let r: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
            if let Some(x) = gauss(a, r) {
                if boxed.feasible(&x) {
                    let v = boxed.value(&x);
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        });
        best
    }

    /// Continuous optimum by vertex enumeration.
    pub fn solve_continuous(&self) -> Oracle {
        let Some(v1) = self.best_vertex(1e6) else {
            return Oracle::Infeasible;
        };
        let v2 = self.best_vertex(2e6).unwrap_or(v1);
        if (v1 - v2).abs() > 1e-6 * (1.0 + v1.abs()) {
            Oracle::Unbounded
        } else {
            Oracle::Optimal(v1)
        }
    }

    /// Optimum over every 0/1 assignment of the binary variables; the
    /// remaining continuous variables must be bounded.
    pub fn solve_binary(&self) -> Oracle {
        let bins: Vec<usize> = (0..self.c.len()).filter(|&j| self.binary[j]).collect();
        let cont: Vec<usize> = (0..self.c.len()).filter(|&j| !self.binary[j]).collect();
        let mut best: Option<f64> = None;
        for mask in 0u32..(1u32 << bins.len()) {
            let mut fixed = vec![0.0; self.c.len()];
            for (b, &j) in bins.iter().enumerate() {
                fixed[j] = ((mask >> b) & 1) as f64;
            }
            let sub = Dense {
                rows: self
                    .rows
                    .iter()
                    .map(|(a, rel, rhs)| {
                        let shift: f64 = bins.iter().map(|&j| a[j] * fixed[j]).sum();
                        (cont.iter().map(|&j| a[j]).collect(), *rel, rhs - shift)
                    })
                    .collect(),
                lo: cont.iter().map(|&j| self.lo[j]).collect(),
                up: cont.iter().map(|&j| self.up[j]).collect(),
                c: cont.iter().map(|&j| self.c[j]).collect(),
                offset: self.offset + bins.iter().map(|&j| self.c[j] * fixed[j]).sum::<f64>(),
                binary: vec![false; cont.len()],
            };
            match sub.solve_continuous() {
                Oracle::Optimal(v) => best = Some(best.map_or(v, |b: f64| b.min(v))),
                Oracle::Unbounded => return Oracle::Unbounded,
                Oracle::Infeasible => {}
            }
        }
        best.map_or(Oracle::Infeasible, Oracle::Optimal)
    }
}

fn combos(total: usize, size: usize, start: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == size {
        f(pick);
        return;
    }
    for i in start..total {
        if total - i < size - pick.len() {
            break;
        }
        pick.push(i);
        combos(total, size, i + 1, pick, f);
        pick.pop();
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, p);
        r.swap(col, p);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[i][k] -= f * a[col][k];
                }
                r[i] -= f * r[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / a[i][i];
    }
    Some(x)
}

fn small_int(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.3) {
        0.0
    } else {
        rng.random_range(-5..=5) as f64
    }
}

fn relation(rng: &mut ChaCha8Rng) -> Relation {
    match rng.random_range(0..10) {
        0 => Relation::Eq,
        1..=3 => Relation::Ge,
        _ => Relation::Le,
    }
}

/// Up to four variables and four rows with small integer data. Most
/// instances are feasible by construction; the rest are arbitrary.
pub fn random_tiny_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=4);
    let mut lp = if rng.random_bool(0.5) {
        LinearProgram::minimize()
    } else {
        LinearProgram::maximize()
    };
    let mut anchor = Vec::with_capacity(n);
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let (lo, up) = match rng.random_range(0..6) {
                0 => (f64::NEG_INFINITY, f64::INFINITY),
                1 => (0.0, f64::INFINITY),
                2 => (f64::NEG_INFINITY, rng.random_range(0..=4) as f64),
                3 => (-(rng.random_range(0..=3) as f64), rng.random_range(0..=3) as f64),
                _ => (0.0, rng.random_range(1..=5) as f64),
            };
            anchor.push(if lo.is_finite() { lo } else if up.is_finite() { up } else { 0.0 });
            lp.add_var(format!("x{j}"), lo, up)
        })
        .collect();
    for &v in &vars {
        lp.set_objective(v, small_int(rng));
    }
    let consistent = rng.random_bool(0.8);
    for i in 0..m {
        let a: Vec<f64> = (0..n).map(|_| small_int(rng)).collect();
        let rel = relation(rng);
        let rhs = if consistent {
            let act: f64 = a.iter().zip(&anchor).map(|(p, q)| p * q).sum();
            let slack = rng.random_range(0..=4) as f64;
            match rel {
                Relation::Le => act + slack,
                Relation::Ge => act - slack,
                Relation::Eq => act,
            }
        } else {
            rng.random_range(-6..=8) as f64
        };
        lp.add_constraint(format!("r{i}"), vars.iter().copied().zip(a), rel, rhs);
    }
    lp
}

/// Up to `max_bin` binaries plus at most two bounded continuous variables.
pub fn random_small_mip(rng: &mut ChaCha8Rng, max_bin: usize) -> LinearProgram {
    let nb = rng.random_range(1..=max_bin);
    let nc = rng.random_range(0..=2);
    let m = rng.random_range(1..=5);
    let mut lp = if rng.random_bool(0.5) {
        LinearProgram::minimize()
    } else {
        LinearProgram::maximize()
    };
    let mut vars = Vec::new();
    let mut anchor = Vec::new();
    for j in 0..nb {
        vars.push(lp.add_binary(format!("z{j}")));
        anchor.push(rng.random_range(0..=1) as f64);
    }
    for j in 0..nc {
        let up = rng.random_range(1..=4) as f64;
        vars.push(lp.add_var(format!("y{j}"), -up, up));
        anchor.push(0.0);
    }
    for &v in &vars {
        lp.set_objective(v, small_int(rng) + rng.random_range(-0.5..0.5));
    }
    let consistent = rng.random_bool(0.85);
    for i in 0..m {
        let a: Vec<f64> = (0..vars.len()).map(|_| small_int(rng)).collect();
        let rel = relation(rng);
        let rhs = if consistent {
            let act: f64 = a.iter().zip(&anchor).map(|(p, q)| p * q).sum();
            match rel {
                Relation::Le => act + rng.random_range(0..=3) as f64,
                Relation::Ge => act - rng.random_range(0..=3) as f64,
                Relation::Eq => act,
            }
        } else {
            rng.random_range(-4..=6) as f64
        };
        lp.add_constraint(format!("r{i}"), vars.iter().copied().zip(a), rel, rhs);
    }
    lp
}
