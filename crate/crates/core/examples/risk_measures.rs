//! VaR, CVaR and the alpha-gamma expectation of a small loss distribution.
//!
//! Run with `cargo run --example risk_measures`.

use agrisk::distribution::DiscreteDistribution;
use agrisk::programs::expectation_via_dual;

fn main() -> agrisk::Result<()> {
    let values = vec![0.0, 0.1, 0.4, 1.0];
    let probs = vec![0.6, 0.25, 0.1, 0.05];
    let d = DiscreteDistribution::new(values.clone(), probs.clone())?;

    println!("mean {:.4}", d.mean());
    for (alpha, gamma) in [(0.5, 0.9), (0.8, 0.9), (0.89, 0.9), (0.9, 1.0)] {
        println!(
            "alpha {alpha:<4} gamma {gamma:<4} VaR {:.4}  CVaR {:.4}  E {:.4}  E via LP {:.4}",
            d.var(gamma)?,
            d.cvar(alpha)?,
            d.expectation_slice(alpha, gamma)?,
            expectation_via_dual(&values, &probs, alpha, gamma)?
        );
    }
    Ok(())
}
