//! All lower and upper estimators of the minimal VaR on a random instance,
//! printed as a report row.
//!
//! Run with `cargo run --example var_estimators [seed]`.

use agrisk::estimators::{estimate_var_min, gap_metrics, reports_to_csv, EstimateConfig};
use agrisk::model::FeasibleSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> agrisk::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k, n) = (3, 8);

    // x in [0, 1]^k with total at least 1; T_i >= g_i . x + h_i.
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        a.push(e.clone());
        b.push(vec![0.0; n]);
        c.push(1.0);
        e[j] = -1.0;
        a.push(e);
        b.push(vec![0.0; n]);
        c.push(0.0);
    }
    a.push(vec![-1.0; k]);
    b.push(vec![0.0; n]);
    c.push(-1.0);
    for i in 0..n {
        a.push((0..k).map(|_| rng.random_range(-1.0..1.0)).collect());
        let mut row = vec![0.0; n];
        row[i] = -1.0;
        b.push(row.clone());
        c.push(-rng.random_range(0.0..1.0));
        a.push(vec![0.0; k]);
        row[i] = 1.0;
        b.push(row);
        c.push(5.0);
    }
    let fs = FeasibleSet::new(a, b, c, vec![])?;
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let mut reports = Vec::new();
    for gamma in [0.7, 0.8] {
        let cfg = EstimateConfig {
            label: format!("random ({gamma})"),
            delta_primes: vec![0.05, 0.1],
            with_ip_true: true,
            ..EstimateConfig::default()
        };
        let r = gap_metrics(estimate_var_min(&fs, &probs, gamma, &cfg)?);
        for v in r.chain_violations() {
            eprintln!("{}: {v}", r.label);
        }
        reports.push(r);
    }
    print!("{}", reports_to_csv(&reports)?);
    Ok(())
}
