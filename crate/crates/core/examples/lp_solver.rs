//! The bundled LP and MIP solvers on a small production problem.
//!
//! Run with `cargo run --example lp_solver`.

use agrisk::lp::{solve_lp, solve_mip, LinearProgram, Relation};

fn main() -> Result<(), agrisk::lp::LpError> {
    let mut lp = LinearProgram::maximize();
    let chairs = lp.add_var("chairs", 0.0, f64::INFINITY);
    let tables = lp.add_var("tables", 0.0, f64::INFINITY);
    lp.set_objective(chairs, 45.0);
    lp.set_objective(tables, 80.0);
    let wood = lp.add_constraint("wood", [(chairs, 5.0), (tables, 20.0)], Relation::Le, 400.0);
    lp.add_constraint("labour", [(chairs, 10.0), (tables, 15.0)], Relation::Le, 450.0);
    print!("{lp}");

    let sol = solve_lp(&lp)?;
    println!(
        "{:?}: profit {:.2}, chairs {:.2}, tables {:.2}, wood price {:.3}",
        sol.status,
        sol.objective,
        sol.value(chairs),
        sol.value(tables),
        sol.dual(wood)
    );

    let mut knap = LinearProgram::maximize();
    let items: Vec<_> = [(4.0, 12.0), (2.0, 2.0), (6.0, 4.0), (1.0, 1.0), (2.0, 1.0)]
        .iter()
        .enumerate()
        .map(|(i, &(value, weight))| {
            let z = knap.add_binary(format!("take_{i}"));
            knap.set_objective(z, value);
            (z, weight)
        })
        .collect();
    knap.add_constraint("capacity", items.iter().copied(), Relation::Le, 15.0);
    let sol = solve_mip(&knap)?;
    let taken: Vec<usize> = (0..items.len()).filter(|&i| sol.value(items[i].0) > 0.5).collect();
    println!("knapsack value {} with items {taken:?} ({} nodes)", sol.objective, sol.nodes);
    Ok(())
}
