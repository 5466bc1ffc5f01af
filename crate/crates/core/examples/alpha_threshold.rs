//! The level alpha* above which the alpha-gamma expectation is VaR.
//!
//! Run with `cargo run --example alpha_threshold`.

use agrisk::distribution::DiscreteDistribution;
use agrisk::threshold::alpha_star;

fn main() -> agrisk::Result<()> {
    let probs = vec![0.5, 0.3, 0.15, 0.05];
    let d = DiscreteDistribution::new(vec![3.0, 0.0, 7.0, 1.0], probs.clone())?;
    for gamma in [0.8, 0.9, 0.99] {
        let cert = alpha_star(&probs, gamma, 10)?;
        println!(
            "gamma {gamma}: alpha* {:.5} after {} steps, E(alpha*, gamma) {:.4}, VaR {:.4}",
            cert.alpha_star,
            cert.steps.len(),
            d.expectation_slice(cert.alpha_star, gamma)?,
            d.var(gamma)?
        );
    }
    Ok(())
}
