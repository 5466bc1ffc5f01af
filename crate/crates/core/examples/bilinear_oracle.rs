//! Minimizing the alpha-gamma expectation over a polyhedron exactly, by
//! enumerating vertices of the tail-mass polytope, next to the CVaR bound.
//!
//! Run with `cargo run --example bilinear_oracle`.

use agrisk::model::{solve_exact_small, var_ip, BigM, BilinearProgram, FeasibleSet};
use agrisk::programs::cvar_min;

/// Two assets `x`; the loss in scenario `i` is at least `g_i . x + h_i`.
fn portfolio() -> agrisk::Result<FeasibleSet> {
    let g = [[0.9, -0.2], [-0.4, 0.8], [0.3, 0.3], [-0.1, -0.3]];
    let h = [0.1, 0.2, 0.0, 0.4];
    let n = g.len();
    let mut a = vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
    let mut b = vec![vec![0.0; n]; 4];
    let mut c = vec![1.0, -1.0, 0.0, 0.0];
    for i in 0..n {
        a.push(g[i].to_vec());
        let mut row = vec![0.0; n];
        row[i] = -1.0;
        b.push(row);
        c.push(-h[i]);
    }
    FeasibleSet::new(a, b, c, vec!["x1".into(), "x2".into()])
}

fn main() -> agrisk::Result<()> {
    let fs = portfolio()?;
    let probs = [0.4, 0.3, 0.2, 0.1];
    let gamma = 0.75;
    for alpha in [0.0, 0.5, 0.7] {
        let bp = BilinearProgram::new(&fs, &probs, alpha, gamma)?;
        let exact = solve_exact_small(&bp)?;
        println!(
            "min E({alpha}, {gamma}) = {:.5} at x = {:?} ({} vertices)",
            exact.value, exact.x, exact.vertices
        );
    }
    let var = var_ip(&fs, &probs, gamma, BigM::Uniform(10.0), false)?;
    let cvar = cvar_min(&fs, &probs, gamma)?;
    println!("min VaR {:.5}, min CVaR {:.5}", var.value, cvar.value);
    Ok(())
}
