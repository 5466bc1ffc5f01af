//! First-level RLT relaxation of the bilinear program: every row of the
//! `(s, θ)` polytope and of `X_T` is multiplied by `w'_j >= 0`,
//! `1 − w'_j >= 0` and `Σ w'_j p_j − (1 − γ) = 0`, and each product of
//! variables is replaced by a linearization variable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, Relation, Status, VarId};
use crate::model::BilinearProgram;
use crate::threshold::AlphaStar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Variant {
    /// The plain relaxation (R).
    Plain,
    /// (R) with `θ_i = θ^w_ii` and the split `P` rows.
    Improved,
    /// (R) built at shifted levels.
    Shifted,
}

/// Construction audit: linearization variables and product rows per family.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Census {
    pub t_w: usize,
    pub x_w: usize,
    pub theta_w: usize,
    pub s_w: usize,
    pub p_times_w: usize,
    pub p_times_one_minus_w: usize,
    pub p_aggregate: usize,
    pub theta_times_w: usize,
    pub theta_times_one_minus_w: usize,
    pub theta_aggregate: usize,
    pub xt_times_w: usize,
    pub xt_times_one_minus_w: usize,
    pub xt_aggregate: usize,
}

impl Census {
    pub fn linearization_vars(&self) -> usize {
        self.t_w + self.x_w + self.theta_w + self.s_w
    }
}

#[derive(Debug, Clone)]
pub struct RltModel {
    pub lp: LinearProgram,
    pub variant: Variant,
    pub alpha: f64,
    pub gamma: f64,
    pub census: Census,
    pub x: Vec<VarId>,
    pub t: Vec<VarId>,
    pub s: VarId,
    pub theta: Vec<VarId>,
    pub wprime: Vec<VarId>,
    /// `T^w[i][j]` linearizes `T_i w'_j`.
    pub t_w: Vec<Vec<VarId>>,
    /// `x^w[l][j]` linearizes `x_l w'_j`.
    pub x_w: Vec<Vec<VarId>>,
    /// `θ^w[i][j]` linearizes `θ_i w'_j`.
    pub theta_w: Vec<Vec<VarId>>,
    /// `s^w[i]` linearizes `s w'_i`.
    pub s_w: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RltSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub wprime: Vec<f64>,
    pub iterations: usize,
}

impl RltModel {
    pub fn solve(&self) -> Result<RltSolution> {
        let stage = match self.variant {
            Variant::Plain => "rlt",
            Variant::Improved => "rlt_improved",
            Variant::Shifted => "rlt_shifted",
        };
        self.lp.debug_dump(stage);
        let sol = lp::solve_lp(&self.lp).map_err(|e| Error::lp(stage, e))?;
        if sol.status != Status::Optimal {
            return Err(Error::solver(stage, sol.status));
        }
        let get = |v: &[VarId]| v.iter().map(|&id| sol.value(id)).collect();
        Ok(RltSolution {
            value: sol.objective,
            x: get(&self.x),
            t: get(&self.t),
            wprime: get(&self.wprime),
            iterations: sol.iterations,
        })
    }
}

/// Terms of `θ^w_ij + p_i s^w_j − p_i T^w_ij`, scaled by `f`.
fn p_times_w(m: &RltModel, p: &[f64], i: usize, j: usize, f: f64) -> [(VarId, f64); 3] {
    [
        (m.theta_w[i][j], f),
        (m.s_w[j], f * p[i]),
        (m.t_w[i][j], -f * p[i]),
    ]
}

/// Terms of `θ_i + p_i s − p_i T_i`, scaled by `f`.
fn p_base(m: &RltModel, p: &[f64], i: usize, f: f64) -> [(VarId, f64); 3] {
    [(m.theta[i], f), (m.s, f * p[i]), (m.t[i], -f * p[i])]
}

fn build(bp: &BilinearProgram<'_>, alpha: f64, gamma: f64, variant: Variant) -> RltModel {
    let fs = bp.fs;
    let n = fs.n();
    let k = fs.k();
    let p = &bp.probs;
    let mut lp = LinearProgram::minimize();
    let vars = fs.add_to(&mut lp);
    let s = lp.add_free_var("s");
    let theta: Vec<VarId> = (0..n).map(|i| lp.add_var(format!("theta_{i}"), 0.0, f64::INFINITY)).collect();
    let wprime: Vec<VarId> = (0..n).map(|i| lp.add_var(format!("wprime_{i}"), 0.0, 1.0)).collect();
    let t_w: Vec<Vec<VarId>> = (0..n)
        .map(|i| (0..n).map(|j| lp.add_free_var(format!("Tw_{i}_{j}"))).collect())
        .collect();
    let x_w: Vec<Vec<VarId>> = (0..k)
        .map(|l| (0..n).map(|j| lp.add_free_var(format!("xw_{l}_{j}"))).collect())
        .collect();
    // θ_i w'_j >= 0 is the product of θ_i >= 0 with w'_j >= 0
    let theta_w: Vec<Vec<VarId>> = (0..n)
        .map(|i| (0..n).map(|j| lp.add_var(format!("thw_{i}_{j}"), 0.0, f64::INFINITY)).collect())
        .collect();
    let s_w: Vec<VarId> = (0..n).map(|i| lp.add_free_var(format!("sw_{i}"))).collect();
    let mut m = RltModel {
        lp: LinearProgram::minimize(),
        variant,
        alpha,
        gamma,
        census: Census {
            t_w: n * n,
            x_w: k * n,
            theta_w: n * n,
            s_w: n,
            ..Census::default()
        },
        x: vars.x.clone(),
        t: vars.t.clone(),
        s,
        theta,
        wprime,
        t_w,
        x_w,
        theta_w,
        s_w,
    };
    let improved = variant == Variant::Improved;
    let rest = 1.0 - gamma;

    // objective (1/(γ−α)) [(1−α) s + Σ (θ_i − p_i T^w_ii)]
    let d = gamma - alpha;
    lp.set_objective(m.s, (1.0 - alpha) / d);
    for i in 0..n {
        lp.set_objective(m.theta[i], 1.0 / d);
        lp.set_objective(m.t_w[i][i], -p[i] / d);
    }

    // base rows
    for i in 0..n {
        if improved {
            lp.add_constraint(
                format!("PI_{i}"),
                [(m.theta[i], 1.0), (m.s_w[i], p[i]), (m.t_w[i][i], -p[i])],
                Relation::Eq,
                0.0,
            );
            lp.add_constraint(
                format!("PIs_{i}"),
                [(m.s, 1.0), (m.s_w[i], -1.0), (m.t[i], -1.0), (m.t_w[i][i], 1.0)],
                Relation::Ge,
                0.0,
            );
        } else {
            lp.add_constraint(format!("P_{i}"), p_base(&m, p, i, 1.0), Relation::Ge, 0.0);
        }
    }
    lp.add_constraint("Wprime", m.wprime.iter().zip(p.iter()).map(|(&w, &q)| (w, q)), Relation::Eq, rest);

    // (s, θ) polytope rows times w'_j, 1 − w'_j, and the mass equality
    for i in 0..n {
        for j in 0..n {
            lp.add_constraint(format!("Pw_{i}_{j}"), p_times_w(&m, p, i, j, 1.0), Relation::Ge, 0.0);
            m.census.p_times_w += 1;
            let terms = p_base(&m, p, i, 1.0).into_iter().chain(p_times_w(&m, p, i, j, -1.0));
            lp.add_constraint(format!("P1w_{i}_{j}"), terms, Relation::Ge, 0.0);
            m.census.p_times_one_minus_w += 1;
        }
        let sum = (0..n).flat_map(|j| p_times_w(&m, p, i, j, p[j]));
        let terms: Vec<_> = sum.chain(p_base(&m, p, i, -rest)).collect();
        lp.add_constraint(format!("Pagg_{i}"), terms, Relation::Eq, 0.0);
        m.census.p_aggregate += 1;
    }

    // θ_i >= 0 times w'_j (variable bound), 1 − w'_j, and the mass equality
    for i in 0..n {
        m.census.theta_times_w += n;
        for j in 0..n {
            let relation = if improved && i == j { Relation::Eq } else { Relation::Ge };
            lp.add_constraint(
                format!("Th1w_{i}_{j}"),
                [(m.theta[i], 1.0), (m.theta_w[i][j], -1.0)],
                relation,
                0.0,
            );
            m.census.theta_times_one_minus_w += 1;
        }
        let terms: Vec<_> = (0..n)
            .map(|j| (m.theta_w[i][j], p[j]))
            .chain(std::iter::once((m.theta[i], -rest)))
            .collect();
        lp.add_constraint(format!("Thagg_{i}"), terms, Relation::Eq, 0.0);
        m.census.theta_aggregate += 1;
    }

    // X_T rows times w'_j, 1 − w'_j, and the mass equality
    let linearized = |m: &RltModel, col: usize, j: usize| {
        if col < k {
            m.x_w[col][j]
        } else {
            m.t_w[col - k][j]
        }
    };
    for r in 0..fs.num_rows() {
        let row = fs.row_terms(r);
        let c = fs.c()[r];
        for j in 0..n {
            let prod: Vec<_> = row
                .iter()
                .map(|&(col, a)| (linearized(&m, col, j), a))
                .chain(std::iter::once((m.wprime[j], -c)))
                .collect();
            lp.add_constraint(format!("XTw_{r}_{j}"), prod.iter().copied(), Relation::Le, 0.0);
            m.census.xt_times_w += 1;
            let comp = row
                .iter()
                .map(|&(col, a)| (vars.stacked(col), a))
                .chain(prod.iter().map(|&(v, a)| (v, -a)));
            lp.add_constraint(format!("XT1w_{r}_{j}"), comp, Relation::Le, c);
            m.census.xt_times_one_minus_w += 1;
        }
        let sum = (0..n).flat_map(|j| {
            row.iter()
                .map(move |&(col, a)| (col, j, a * p[j]))
                .map(|(col, j, a)| (linearized(&m, col, j), a))
                .chain(std::iter::once((m.wprime[j], -c * p[j])))
        });
        let base = row.iter().map(|&(col, a)| (vars.stacked(col), -rest * a));
        let terms: Vec<_> = sum.chain(base).collect();
        lp.add_constraint(format!("XTagg_{r}"), terms, Relation::Eq, -rest * c);
        m.census.xt_aggregate += 1;
    }
    m.lp = lp;
    m
}

/// The relaxation (R) at the program's own levels.
pub fn build_rlt(bp: &BilinearProgram<'_>) -> RltModel {
    build(bp, bp.alpha, bp.gamma, Variant::Plain)
}

/// (R_I): valid for the VaR problem when `α >= α*` at the same `γ`.
pub fn build_rlt_improved(bp: &BilinearProgram<'_>, cert: &AlphaStar) -> Result<RltModel> {
    if (cert.gamma - bp.gamma).abs() > 1e-12 {
        return Err(Error::validation(format!(
            "threshold certificate is for gamma = {}, program has {}",
            cert.gamma, bp.gamma
        )));
    }
    if bp.alpha < cert.alpha_star - 1e-12 {
        return Err(Error::validation(format!(
            "alpha = {} is below alpha* = {}",
            bp.alpha, cert.alpha_star
        )));
    }
    Ok(build(bp, bp.alpha, bp.gamma, Variant::Improved))
}

/// Whether `(α̃, γ̃)` makes `W'` a simplex for these probabilities.
pub fn shift_admissible(probs: &[f64], alpha: f64, gamma: f64) -> bool {
    let min_p = probs.iter().copied().fold(f64::INFINITY, f64::min);
    alpha < gamma && gamma <= 1.0 && alpha >= 0.0 && gamma > 1.0 - min_p
}

/// (R) at levels `(α̃, γ̃)` with `γ̃ > 1 − min p`, where it is exact.
pub fn build_rlt_shifted(bp: &BilinearProgram<'_>, alpha: f64, gamma: f64) -> Result<RltModel> {
    if !shift_admissible(&bp.probs, alpha, gamma) {
        return Err(Error::validation(format!(
            "shifted levels ({alpha}, {gamma}) need alpha < gamma <= 1 and gamma > 1 - min p"
        )));
    }
    Ok(build(bp, alpha, gamma, Variant::Shifted))
}
