//! Alternating between the decision and the tail mass for an upper bound,
//! with the trace written as CSV.
//!
//! Run with `cargo run --example alternating_minimization`.

use agrisk::altmin::{alternate_minimize, DEFAULT_EPS};
use agrisk::model::{BilinearProgram, FeasibleSet};

fn main() -> agrisk::Result<()> {
    // x in [0, 1]; T_1 >= 2x, T_2 >= 1 - x, T_3 >= 0.3 + 0.5x.
    let a = vec![vec![1.0], vec![-1.0], vec![2.0], vec![-1.0], vec![0.5]];
    let b = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, -1.0],
    ];
    let fs = FeasibleSet::new(a, b, vec![1.0, 0.0, 0.0, -1.0, -0.3], vec![])?;
    let bp = BilinearProgram::new(&fs, &[0.5, 0.3, 0.2], 0.6, 0.8)?;
    let r = alternate_minimize(&bp, DEFAULT_EPS)?;
    println!("value {:.6} after {} rounds at x = {:?}", r.value, r.rounds, r.x);
    r.write_trace_csv(std::io::stdout().lock())
        .map_err(|e| agrisk::Error::Internal(e.to_string()))?;
    Ok(())
}
