//! Alpha–gamma expectation risk measures on discrete distributions and
//! bounds for minimizing them over a polyhedron.
//!
//! The α–γ expectation `E_{α−γ}` averages the quantile function of a loss
//! over the probability band `[α, γ]`. It is CVaR when `γ = 1` and tends to
//! VaR as `α ↑ γ`. Minimizing it over `{(x, T) : A x + B T <= c}` is a
//! bilinear program; this crate computes lower bounds (LP relaxation of the
//! VaR integer program, first-level RLT) and upper bounds (CVaR, shifted
//! RLT, alternating minimization) for it, and ships a traffic-engineering
//! harness that builds such instances from a network topology.
//!
//! ```
//! use agrisk::distribution::DiscreteDistribution;
//!
//! let d = DiscreteDistribution::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.25; 4]).unwrap();
//! assert_eq!(d.quantile(0.5).unwrap(), 2.0);
//! assert!((d.expectation_slice(0.5, 1.0).unwrap() - 3.5).abs() < 1e-12);
//! ```

pub mod altmin;
pub mod cli;
pub mod distribution;
pub mod error;
pub mod estimators;
pub mod lp;
pub mod model;
pub mod nette;
pub mod programs;
pub mod rlt;
pub mod threshold;

pub use error::{Error, Result};
