//! Linear programs for fixed `T` or fixed `w'`: the dual form of the α–γ
//! expectation, CVaR minimization, and the two alternating subproblems.

use crate::distribution::{validate_levels, validate_probs};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, Relation, RowId, Solution, Status, VarId};
use crate::model::{BilinearProgram, FeasibleSet};

/// Tolerance for membership checks on `w'` and `(x, T)`.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

fn solved(lp: &LinearProgram, stage: &str) -> Result<Solution> {
    lp.debug_dump(stage);
    let sol = lp::solve_lp(lp).map_err(|e| Error::lp(stage, e))?;
    if sol.status != Status::Optimal {
        return Err(Error::solver(stage, sol.status));
    }
    Ok(sol)
}

/// `s`, `θ` and the rows `θ_i + p_i s − p_i T_i >= 0`, with `T_i` either a
/// variable or a constant.
struct StPolytope {
    s: VarId,
    theta: Vec<VarId>,
    rows: Vec<RowId>,
}

enum Loss<'a> {
    Fixed(&'a [f64]),
    Var(&'a [VarId]),
}

fn add_st_polytope(lp: &mut LinearProgram, probs: &[f64], loss: Loss<'_>) -> StPolytope {
    let s = lp.add_free_var("s");
    let theta: Vec<VarId> = (0..probs.len())
        .map(|i| lp.add_var(format!("theta_{i}"), 0.0, f64::INFINITY))
        .collect();
    let rows = (0..probs.len())
        .map(|i| {
            let p = probs[i];
            match loss {
                Loss::Fixed(t) => lp.add_constraint(format!("P_{i}"), [(theta[i], 1.0), (s, p)], Relation::Ge, t[i] * p),
                Loss::Var(t) => lp.add_constraint(
                    format!("P_{i}"),
                    [(theta[i], 1.0), (s, p), (t[i], -p)],
                    Relation::Ge,
                    0.0,
                ),
            }
        })
        .collect();
    StPolytope { s, theta, rows }
}

/// Minimum over `(s, θ, w')` for a fixed loss vector; returns the LP
/// solution together with the `w'` handles.
fn fixed_loss_lp(t: &[f64], probs: &[f64], alpha: f64, gamma: f64, stage: &str) -> Result<(Solution, StPolytope, Vec<VarId>)> {
    let n = probs.len();
    let d = gamma - alpha;
    let mut lp = LinearProgram::minimize();
    let st = add_st_polytope(&mut lp, probs, Loss::Fixed(t));
    let wp: Vec<VarId> = (0..n).map(|i| lp.add_var(format!("wprime_{i}"), 0.0, 1.0)).collect();
    lp.add_constraint("Wprime", wp.iter().zip(probs).map(|(&w, &p)| (w, p)), Relation::Eq, 1.0 - gamma);
    lp.set_objective(st.s, (1.0 - alpha) / d);
    for i in 0..n {
        lp.set_objective(st.theta[i], 1.0 / d);
        lp.set_objective(wp[i], -t[i] * probs[i] / d);
    }
    let sol = solved(&lp, stage)?;
    Ok((sol, st, wp))
}

/// `E_{α−γ}[T]` from the joint LP over `(s, θ) ∈ P` and `w' ∈ W'`.
pub fn expectation_via_dual(values: &[f64], probs: &[f64], alpha: f64, gamma: f64) -> Result<f64> {
    if values.len() != probs.len() {
        return Err(Error::validation("values and probabilities differ in length"));
    }
    validate_probs(probs)?;
    validate_levels(alpha, gamma)?;
    let (sol, _, _) = fixed_loss_lp(values, probs, alpha, gamma, "expectation_dual")
        .map_err(|e| match e {
            Error::Solver { status, .. } => Error::Internal(format!("expectation LP returned {status:?}")),
            other => other,
        })?;
    Ok(sol.objective)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvarSolution {
    pub value: f64,
    pub eta: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

/// `min η + (1/(1−γ)) Σ φ_q p_q` over `X_T` with `φ_q >= T_q − η`, `φ >= 0`.
pub fn cvar_min(fs: &FeasibleSet, probs: &[f64], gamma: f64) -> Result<CvarSolution> {
    let n = fs.n();
    if probs.len() != n {
        return Err(Error::validation(format!("{} probabilities for {n} scenarios", probs.len())));
    }
    validate_probs(probs)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::validation(format!("CVaR level {gamma} outside [0, 1)")));
    }
    let mut lp = LinearProgram::minimize();
    let vars = fs.add_to(&mut lp);
    let eta = lp.add_free_var("eta");
    lp.set_objective(eta, 1.0);
    for q in 0..n {
        let phi = lp.add_var(format!("phi_{q}"), 0.0, f64::INFINITY);
        lp.set_objective(phi, probs[q] / (1.0 - gamma));
        lp.add_constraint(
            format!("tail_{q}"),
            [(phi, 1.0), (vars.t[q], -1.0), (eta, 1.0)],
            Relation::Ge,
            0.0,
        );
    }
    let sol = solved(&lp, "cvar_min")?;
    Ok(CvarSolution {
        value: sol.objective,
        eta: sol.value(eta),
        x: vars.x.iter().map(|&v| sol.value(v)).collect(),
        t: vars.t.iter().map(|&v| sol.value(v)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FindXt {
    pub value: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub s: f64,
    pub theta: Vec<f64>,
    /// Multipliers of the `P` rows rescaled to the `W` polytope
    /// (`Σ w_i p_i = 1 − α`).
    pub w: Vec<f64>,
}

/// Minimize the bilinear objective over `(x, T, s, θ)` with `w'` fixed.
///
/// `w' = 0` is accepted even when it is outside `W'`; it is the `γ = 1`
/// member of the family and is evaluated with denominator `1 − α`, which
/// makes the value the minimum of `CVaR_α` over `X_T`.
pub fn find_xt(bp: &BilinearProgram<'_>, wprime: &[f64]) -> Result<FindXt> {
    let n = bp.n();
    if wprime.len() != n {
        return Err(Error::validation(format!("w' has {} entries for {n} scenarios", wprime.len())));
    }
    let zero = wprime.iter().all(|&w| w == 0.0);
    if !zero && !bp.in_w_prime(wprime, MEMBERSHIP_TOL) {
        return Err(Error::validation("w' is not in W'"));
    }
    let d = if zero { 1.0 - bp.alpha } else { bp.gamma - bp.alpha };
    let mut lp = LinearProgram::minimize();
    let vars = bp.fs.add_to(&mut lp);
    let st = add_st_polytope(&mut lp, &bp.probs, Loss::Var(&vars.t));
    lp.set_objective(st.s, (1.0 - bp.alpha) / d);
    for i in 0..n {
        lp.set_objective(st.theta[i], 1.0 / d);
        lp.set_objective(vars.t[i], -bp.probs[i] * wprime[i] / d);
    }
    let sol = solved(&lp, "find_xt")?;
    Ok(FindXt {
        value: sol.objective,
        x: vars.x.iter().map(|&v| sol.value(v)).collect(),
        t: vars.t.iter().map(|&v| sol.value(v)).collect(),
        s: sol.value(st.s),
        theta: st.theta.iter().map(|&v| sol.value(v)).collect(),
        w: st.rows.iter().map(|&r| sol.dual(r) * d).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FindW {
    pub value: f64,
    pub wprime: Vec<f64>,
    pub s: f64,
    pub theta: Vec<f64>,
}

/// Minimize the bilinear objective over `(s, θ, w')` with `(x, T)` fixed.
pub fn find_w(bp: &BilinearProgram<'_>, x: &[f64], t: &[f64]) -> Result<FindW> {
    if x.len() != bp.fs.k() || t.len() != bp.n() {
        return Err(Error::validation("(x, T) dimensions do not match the feasible set"));
    }
    let viol = bp.fs.max_violation(x, t);
    if viol > MEMBERSHIP_TOL {
        return Err(Error::validation(format!("(x, T) violates X_T by {viol:e}")));
    }
    let (sol, st, wp) = fixed_loss_lp(t, &bp.probs, bp.alpha, bp.gamma, "find_w")?;
    Ok(FindW {
        value: sol.objective,
        wprime: wp.iter().map(|&v| sol.value(v).clamp(0.0, 1.0)).collect(),
        s: sol.value(st.s),
        theta: st.theta.iter().map(|&v| sol.value(v)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::DiscreteDistribution;

    fn seesaw() -> FeasibleSet {
        let a = vec![vec![-1.0], vec![1.0], vec![1.0], vec![-1.0], vec![1.0], vec![-1.0]];
        let b = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        ];
        FeasibleSet::new(a, b, vec![0.0, 0.0, 1.0, -1.0, 1.0, 0.0], vec![]).unwrap()
    }

    #[test]
    fn dual_expectation_examples() {
        let q = [0.25; 4];
        let t = [1.0, 2.0, 3.0, 4.0];
        assert!((expectation_via_dual(&t, &q, 0.5, 1.0).unwrap() - 3.5).abs() < 1e-9);
        assert!((expectation_via_dual(&[1.0, 3.0], &[0.5, 0.5], 0.5, 0.8).unwrap() - 3.0).abs() < 1e-9);
        assert!((expectation_via_dual(&[2.5; 3], &[0.2, 0.3, 0.5], 0.1, 0.7).unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn cvar_examples() {
        let fs = FeasibleSet::fixed(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((cvar_min(&fs, &[0.25; 4], 0.5).unwrap().value - 3.5).abs() < 1e-9);
        assert!((cvar_min(&seesaw(), &[0.5, 0.5], 0.75).unwrap().value - 0.5).abs() < 1e-9);
        assert!((cvar_min(&seesaw(), &[0.5, 0.5], 0.0).unwrap().value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn alternating_subproblems() {
        let fs = seesaw();
        let bp = BilinearProgram::new(&fs, &[0.5, 0.5], 0.5, 0.75).unwrap();
        let first = find_xt(&bp, &[0.0, 0.0]).unwrap();
        assert!((first.value - 0.5).abs() < 1e-9);
        let cvar = cvar_min(&fs, &[0.5, 0.5], 0.5).unwrap();
        assert!((first.value - cvar.value).abs() < 1e-9);

        let fixed = FeasibleSet::fixed(&[1.0, 3.0]).unwrap();
        let bp = BilinearProgram::new(&fixed, &[0.5, 0.5], 0.5, 0.8).unwrap();
        let w = find_w(&bp, &[], &[1.0, 3.0]).unwrap();
        assert!((w.value - 3.0).abs() < 1e-9);
        assert!(bp.in_w_prime(&w.wprime, 1e-9));
        assert!(find_w(&bp, &[], &[1.0, 2.0]).is_err());
        assert!(find_xt(&bp, &[1.0, 1.0]).is_err());

        let fixed = FeasibleSet::fixed(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let bp = BilinearProgram::new(&fixed, &[0.25; 4], 0.25, 0.75).unwrap();
        let w = find_w(&bp, &[], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let d = DiscreteDistribution::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.25; 4]).unwrap();
        assert!((w.value - d.expectation_slice(0.25, 0.75).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn recovered_w_lies_in_w_polytope() {
        let fixed = FeasibleSet::fixed(&[0.3, 1.7, 0.9]).unwrap();
        let probs = [0.2, 0.5, 0.3];
        let bp = BilinearProgram::new(&fixed, &probs, 0.4, 0.9).unwrap();
        let w = find_w(&bp, &[], &[0.3, 1.7, 0.9]).unwrap();
        let xt = find_xt(&bp, &w.wprime).unwrap();
        let mass: f64 = xt.w.iter().zip(&probs).map(|(a, b)| a * b).sum();
        assert!((mass - 0.6).abs() < 1e-9);
        for (wi, wpi) in xt.w.iter().zip(&w.wprime) {
            assert!(*wi >= wpi - 1e-8);
            assert!(*wi <= 1.0 + 1e-9);
        }
    }
}
