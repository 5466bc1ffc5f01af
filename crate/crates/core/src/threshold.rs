//! The level `α*` above which the α–γ expectation equals `VaR_γ`.

use serde::Serialize;

use crate::distribution::validate_probs;
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, Relation, Status};

pub const DEFAULT_B: u32 = 10;
const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaStar {
    pub gamma: f64,
    pub alpha_star: f64,
    /// Smallest achievable cumulative mass at or above `alpha_star`.
    pub o_star: f64,
    /// Subset attaining `o_star`.
    pub eta_star: Vec<bool>,
    /// Every level tried, ending with `alpha_star`.
    pub steps: Vec<f64>,
}

/// Smallest subset mass `Σ η_i p_i >= level` over binary `η`.
pub fn min_mass_at_least(probs: &[f64], level: f64) -> Result<(f64, Vec<bool>)> {
    let mut lp = LinearProgram::minimize();
    let o = lp.add_free_var("O");
    lp.set_objective(o, 1.0);
    let eta: Vec<_> = (0..probs.len()).map(|i| lp.add_binary(format!("eta_{i}"))).collect();
    let mass = || eta.iter().zip(probs).map(|(&v, &p)| (v, p));
    lp.add_constraint("cover", std::iter::once((o, 1.0)).chain(mass().map(|(v, p)| (v, -p))), Relation::Ge, 0.0);
    lp.add_constraint("level", mass(), Relation::Ge, level);
    lp.debug_dump("alpha_star_step");
    let sol = lp::solve_mip(&lp).map_err(|e| Error::lp("alpha_star", e))?;
    if sol.status != Status::Optimal {
        return Err(Error::solver("alpha_star", sol.status));
    }
    let chosen: Vec<bool> = eta.iter().map(|&v| sol.value(v) > 0.5).collect();
    let exact: f64 = chosen.iter().zip(probs).filter(|(c, _)| **c).map(|(_, p)| p).sum();
    Ok((exact, chosen))
}

/// Raise `α_k = α_{k−1} + (γ − α_{k−1}) / b` from 0 until the smallest
/// achievable mass at or above `α_k` reaches `γ`.
pub fn alpha_star(probs: &[f64], gamma: f64, b: u32) -> Result<AlphaStar> {
    validate_probs(probs)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::validation(format!("gamma = {gamma} outside (0, 1]")));
    }
    if b < 2 {
        return Err(Error::validation(format!("b must be at least 2, got {b}")));
    }
    let cap = 10 * b as usize * probs.len();
    let mut alpha = 0.0;
    let mut steps = Vec::new();
    for _ in 0..cap {
        let next = alpha + (gamma - alpha) / b as f64;
        if next <= alpha {
            break;
        }
        alpha = next;
        steps.push(alpha);
        let (o_star, eta_star) = min_mass_at_least(probs, alpha)?;
        if o_star >= gamma - MASS_SLACK {
            return Ok(AlphaStar {
                gamma,
                alpha_star: alpha,
                o_star,
                eta_star,
                steps,
            });
        }
    }
    Err(Error::Internal(format!("alpha_star did not certify within {cap} steps")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_atoms() {
        let r = alpha_star(&[0.25; 4], 0.9, 2).unwrap();
        assert!((r.alpha_star - 0.7875).abs() < 1e-12);
        assert_eq!(r.steps.len(), 3);
        assert!((r.o_star - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_atom() {
        let r = alpha_star(&[1.0], 0.8, 2).unwrap();
        assert!((r.alpha_star - 0.4).abs() < 1e-12);
        assert_eq!(r.eta_star, vec![true]);
    }

    #[test]
    fn gamma_one_terminates_below_one() {
        let r = alpha_star(&[0.1, 0.2, 0.3, 0.4], 1.0, 10).unwrap();
        assert!(r.alpha_star < 1.0);
        assert!((r.o_star - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_b() {
        assert!(alpha_star(&[1.0], 0.5, 1).is_err());
    }
}
