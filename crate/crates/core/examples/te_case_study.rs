//! Bounds on the VaR of demand loss for a B4-like network.
//!
//! Run with `cargo run --release --example te_case_study [seed]`.

use agrisk::estimators::reports_to_csv;
use agrisk::nette::{prepare_instance, run_case_study, CaseStudyConfig, Topology};

fn main() -> agrisk::Result<()> {
    env_logger::init();
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let topology = Topology::b4_like(seed);
    let cfg = CaseStudyConfig {
        seed,
        ..CaseStudyConfig::default()
    };

    let art = prepare_instance(&topology, &cfg)?;
    println!(
        "{}: {} links, {} demands, {} tunnels, {} scenarios (mass {:.6})",
        art.topology.label(),
        art.topology.edges.len(),
        art.demands.len(),
        art.tunnels.total(),
        art.scenarios.len(),
        art.scenarios.covered_mass
    );

    let reports = run_case_study(&topology, &cfg)?;
    print!("{}", reports_to_csv(&reports)?);
    for r in &reports {
        for v in r.chain_violations() {
            println!("{}: {v}", r.label);
        }
    }
    Ok(())
}
