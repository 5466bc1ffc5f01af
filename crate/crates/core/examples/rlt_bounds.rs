//! Lower bounds from the first-level RLT relaxation and its variants.
//!
//! Run with `cargo run --example rlt_bounds`.

use agrisk::model::{solve_exact_small, var_ip, BigM, BilinearProgram, FeasibleSet};
use agrisk::rlt::{build_rlt, build_rlt_improved, build_rlt_shifted};
use agrisk::threshold::alpha_star;

fn main() -> agrisk::Result<()> {
    // x in [0, 1]; T_1 >= x, T_2 >= 1 - x, T_3 >= 0.5.
    let a = vec![vec![1.0], vec![-1.0], vec![1.0], vec![-1.0], vec![0.0]];
    let b = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, -1.0],
    ];
    let fs = FeasibleSet::new(a, b, vec![1.0, 0.0, 0.0, -1.0, -0.5], vec!["x".into()])?;
    let probs = [0.45, 0.35, 0.2];
    let gamma = 0.7;

    let cert = alpha_star(&probs, gamma, 10)?;
    let bp = BilinearProgram::new(&fs, &probs, cert.alpha_star, gamma)?;
    let plain = build_rlt(&bp);
    println!("RLT model: {} variables, {} rows", plain.lp.num_vars(), plain.lp.num_rows());
    println!("R   = {:.5}", plain.solve()?.value);
    println!("R_I = {:.5}", build_rlt_improved(&bp, &cert)?.solve()?.value);
    println!("VaR = {:.5}", var_ip(&fs, &probs, gamma, BigM::Uniform(10.0), false)?.value);
    println!("E   = {:.5} (exact at alpha*)", solve_exact_small(&bp)?.value);

    let shifted = BilinearProgram::new(&fs, &probs, gamma, 0.9)?;
    println!("shifted RLT at (0.7, 0.9) = {:.5}", build_rlt_shifted(&shifted, gamma, 0.9)?.solve()?.value);
    Ok(())
}
