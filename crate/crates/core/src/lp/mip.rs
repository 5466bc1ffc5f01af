use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::solve::solve_relaxation;
use super::{LinearProgram, LpError, Sense, Solution, Status, INT_TOL};

const NODE_BUDGET: usize = 2_000_000;

struct Node {
    /// Relaxation bound in minimization form.
    bound: f64,
    depth: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: smallest bound first, deeper node on ties
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
    }
}

/// Best-bound branch-and-bound over the binary variables, branching on the
/// most fractional one. Models without binaries are solved as plain LPs.
pub fn solve_mip(lp: &LinearProgram) -> Result<Solution, LpError> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_rows();
    let binaries = lp.binaries();
    let depth_cap = 10 * binaries.len().max(1);
    let to_min = |v: f64| match lp.sense() {
        Sense::Minimize => v,
        Sense::Maximize => -v,
    };

    let lower: Vec<f64> = lp.vars().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = lp.vars().iter().map(|v| v.upper).collect();
    let root = solve_relaxation(lp, &lower, &upper);
    let mut iterations = root.iterations;
    match root.status {
        Status::Optimal => {}
        status => {
            let mut sol = Solution::without_point(status, n, m);
            sol.iterations = iterations;
            sol.nodes = 1;
            return Ok(sol);
        }
    }
    if binaries.is_empty() {
        let mut sol = root;
        sol.nodes = 1;
        return Ok(sol);
    }

    let mut heap = BinaryHeap::new();
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut pending = Some((root, lower, upper, 0usize));

    loop {
        let (relax, lo, up, depth) = match pending.take() {
            Some(p) => p,
            None => {
                let Some(node) = heap.pop() else { break };
                let node: Node = node;
                if let Some((best, _)) = &incumbent {
                    if node.bound >= best - prune_gap(*best) {
                        continue;
                    }
                }
                let relax = solve_relaxation(lp, &node.lower, &node.upper);
                (relax, node.lower, node.upper, node.depth)
            }
        };
        nodes += 1;
        iterations += relax.iterations;
        if nodes > NODE_BUDGET {
            return Err(LpError::NodeBudget(NODE_BUDGET));
        }
        match relax.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded => {
                let mut sol = Solution::without_point(Status::Unbounded, n, m);
                sol.iterations = iterations;
                sol.nodes = nodes;
                return Ok(sol);
            }
            Status::Stalled => {
                log::warn!("relaxation stalled at depth {depth}; node skipped");
                continue;
            }
        }
        let bound = to_min(relax.objective);
        if let Some((best, _)) = &incumbent {
            if bound >= best - prune_gap(*best) {
                continue;
            }
        }
        let mut branch = None;
        let mut most = INT_TOL;
        for &b in &binaries {
            let v = relax.values[b.0];
            let frac = (v - v.round()).abs();
            if frac > most {
                most = frac;
                branch = Some(b.0);
            }
        }
        match branch {
            None => {
                let mut x = relax.values;
                for &b in &binaries {
                    x[b.0] = x[b.0].round();
                }
                incumbent = Some((bound, x));
            }
            Some(j) => {
                if depth + 1 > depth_cap {
                    return Err(LpError::DepthExceeded(depth_cap));
                }
                for value in [0.0, 1.0] {
                    let mut l = lo.clone();
                    let mut u = up.clone();
                    l[j] = value;
                    u[j] = value;
                    heap.push(Node {
                        bound,
                        depth: depth + 1,
                        lower: l,
                        upper: u,
                    });
                }
            }
        }
    }

    match incumbent {
        Some((_, x)) => Ok(Solution {
            status: Status::Optimal,
            objective: lp.evaluate(&x),
            values: x,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            dual_objective: f64::NAN,
            iterations,
            nodes,
        }),
        None => {
            let mut sol = Solution::without_point(Status::Infeasible, n, m);
            sol.iterations = iterations;
            sol.nodes = nodes;
            Ok(sol)
        }
    }
}

fn prune_gap(best: f64) -> f64 {
    1e-9 * (1.0 + best.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Relation;

    #[test]
    fn knapsack() {
        // values 10, 13, 7, 8; weights 3, 4, 2, 3; capacity 7
        let mut lp = LinearProgram::maximize();
        let vals = [10.0, 13.0, 7.0, 8.0];
        let wts = [3.0, 4.0, 2.0, 3.0];
        let z: Vec<_> = (0..4).map(|i| lp.add_binary(format!("z{i}"))).collect();
        for i in 0..4 {
            lp.set_objective(z[i], vals[i]);
        }
        lp.add_constraint("cap", z.iter().zip(wts).map(|(&v, w)| (v, w)), Relation::Le, 7.0);
        let sol = solve_mip(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        // {1, 2}: 13 + 7 = 20, weight 6; {0, 1}: 23, weight 7
        assert!((sol.objective - 23.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_integer_problem() {
        // z0 + z1 = 1.5 has fractional solutions only
        let mut lp = LinearProgram::minimize();
        let a = lp.add_binary("a");
        let b = lp.add_binary("b");
        lp.add_constraint("half", [(a, 1.0), (b, 1.0)], Relation::Eq, 1.5);
        assert_eq!(solve_mip(&lp).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn plain_lp_is_rejected_by_lp_entry_but_not_mip_entry() {
        let mut lp = LinearProgram::minimize();
        let z = lp.add_binary("z");
        lp.set_objective(z, 1.0);
        assert_eq!(crate::lp::solve_lp(&lp), Err(LpError::BinaryInLp));
        assert!((solve_mip(&lp).unwrap().objective).abs() < 1e-12);
    }
}
