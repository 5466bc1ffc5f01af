use super::simplex::{self, CompForm, Outcome, SimplexResult};
use super::{LinearProgram, LpError, Relation, Sense, Solution, Status};

/// Rows-to-columns ratio above which the dual is solved first.
const DUAL_ROUTE_RATIO: f64 = 1.5;

const CERTIFY_TOL: f64 = 1e-6;

/// Solve a model without binaries.
pub fn solve_lp(lp: &LinearProgram) -> Result<Solution, LpError> {
    if lp.has_binaries() {
        return Err(LpError::BinaryInLp);
    }
    lp.validate()?;
    let lower: Vec<f64> = lp.vars().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = lp.vars().iter().map(|v| v.upper).collect();
    Ok(solve_relaxation(lp, &lower, &upper))
}

/// Solve the continuous relaxation with overridden variable bounds.
pub(crate) fn solve_relaxation(lp: &LinearProgram, lower: &[f64], upper: &[f64]) -> Solution {
    let n = lp.num_vars();
    let m = lp.num_rows();
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Solution::without_point(Status::Infeasible, n, m);
    }
    let prefer_dual = (m as f64) > DUAL_ROUTE_RATIO * n as f64 + 10.0;
    let first = if prefer_dual {
        dual_route(lp, lower, upper)
    } else {
        Some(primal_route(lp, lower, upper))
    };
    match first {
        Some(sol) if sol.status == Status::Optimal && certified(lp, lower, upper, &sol) => sol,
        Some(sol) if matches!(sol.status, Status::Infeasible | Status::Unbounded) && !prefer_dual => sol,
        other => {
            log::debug!(
                "{} route gave {:?}; retrying with the other route",
                if prefer_dual { "dual" } else { "primal" },
                other.as_ref().map(|s| s.status)
            );
            let second = if prefer_dual {
                Some(primal_route(lp, lower, upper))
            } else {
                dual_route(lp, lower, upper)
            };
            pick(lp, lower, upper, other, second)
        }
    }
}

fn pick(
    lp: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    a: Option<Solution>,
    b: Option<Solution>,
) -> Solution {
    let n = lp.num_vars();
    let m = lp.num_rows();
    match (a, b) {
        (Some(a), Some(b)) => {
            let score = |s: &Solution| match s.status {
                Status::Optimal if certified(lp, lower, upper, s) => 0,
                Status::Infeasible | Status::Unbounded => 1,
                Status::Optimal => 2,
                Status::Stalled => 3,
            };
            if score(&b) < score(&a) {
                b
            } else {
                a
            }
        }
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => Solution::without_point(Status::Stalled, n, m),
    }
}

fn certified(lp: &LinearProgram, lower: &[f64], upper: &[f64], sol: &Solution) -> bool {
    let mut worst: f64 = 0.0;
    for (j, &x) in sol.values.iter().enumerate() {
        if !x.is_finite() {
            return false;
        }
        worst = worst.max(lower[j] - x).max(x - upper[j]);
    }
    for row in lp.rows() {
        let act: f64 = row.coeffs.iter().map(|&(j, a)| a * sol.values[j]).sum();
        let scale = 1.0 + row.rhs.abs();
        let viol = match row.relation {
            Relation::Le => act - row.rhs,
            Relation::Ge => row.rhs - act,
            Relation::Eq => (act - row.rhs).abs(),
        };
        worst = worst.max(viol / scale);
    }
    worst <= CERTIFY_TOL
}

fn row_range(rel: Relation, rhs: f64) -> (f64, f64) {
    match rel {
        Relation::Le => (f64::NEG_INFINITY, rhs),
        Relation::Ge => (rhs, f64::INFINITY),
        Relation::Eq => (rhs, rhs),
    }
}

fn min_costs(lp: &LinearProgram) -> Vec<f64> {
    match lp.sense() {
        Sense::Minimize => lp.objective().to_vec(),
        Sense::Maximize => lp.objective().iter().map(|c| -c).collect(),
    }
}

fn status_of(outcome: Outcome) -> Status {
    match outcome {
        Outcome::Optimal => Status::Optimal,
        Outcome::Infeasible => Status::Infeasible,
        Outcome::Unbounded => Status::Unbounded,
        Outcome::Stalled => Status::Stalled,
    }
}

fn primal_route(lp: &LinearProgram, lower: &[f64], upper: &[f64]) -> Solution {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let mut counts = vec![0usize; n + 1];
    for row in lp.rows() {
        for &(j, _) in &row.coeffs {
            counts[j + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let col_start = counts.clone();
    let nnz = col_start[n];
    let mut fill = counts;
    let mut row_idx = vec![0usize; nnz];
    let mut vals = vec![0.0; nnz];
    let mut row_lower = Vec::with_capacity(m);
    let mut row_upper = Vec::with_capacity(m);
    for (r, row) in lp.rows().iter().enumerate() {
        for &(j, a) in &row.coeffs {
            row_idx[fill[j]] = r;
            vals[fill[j]] = a;
            fill[j] += 1;
        }
        let (lo, hi) = row_range(row.relation, row.rhs);
        row_lower.push(lo);
        row_upper.push(hi);
    }
    let mut form = CompForm {
        m,
        n,
        col_start,
        row_idx,
        vals,
        cost: min_costs(lp),
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        row_lower,
        row_upper,
    };
    let (rs, cs) = form.scale();
    let SimplexResult { outcome, x, y, iterations } = simplex::solve(&form);
    let status = status_of(outcome);
    if status != Status::Optimal {
        let mut sol = Solution::without_point(status, n, m);
        sol.iterations = iterations;
        return sol;
    }
    let x: Vec<f64> = x.iter().zip(&cs).map(|(v, s)| v * s).collect();
    let y: Vec<f64> = y.iter().zip(&rs).map(|(v, s)| v * s).collect();
    finalize(lp, lower, upper, x, y, iterations)
}

/// Solve the LP dual (rows become columns); the primal point is recovered
/// from the dual's row multipliers. Returns `None` when the dual is
/// infeasible, which leaves the primal status undecided.
fn dual_route(lp: &LinearProgram, lower: &[f64], upper: &[f64]) -> Option<Solution> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let c = min_costs(lp);
    let mut col_start = vec![0usize];
    let mut row_idx = Vec::new();
    let mut vals = Vec::new();
    let mut cost = Vec::new();
    let mut lo = Vec::new();
    let mut up = Vec::new();
    for row in lp.rows() {
        for &(j, a) in &row.coeffs {
            row_idx.push(j);
            vals.push(a);
        }
        col_start.push(row_idx.len());
        cost.push(-row.rhs);
        let (l, u) = match row.relation {
            Relation::Ge => (0.0, f64::INFINITY),
            Relation::Le => (f64::NEG_INFINITY, 0.0),
            Relation::Eq => (f64::NEG_INFINITY, f64::INFINITY),
        };
        lo.push(l);
        up.push(u);
    }
    for j in 0..n {
        if lower[j].is_finite() {
            row_idx.push(j);
            vals.push(1.0);
            col_start.push(row_idx.len());
            cost.push(-lower[j]);
            lo.push(0.0);
            up.push(f64::INFINITY);
        }
        if upper[j].is_finite() {
            row_idx.push(j);
            vals.push(-1.0);
            col_start.push(row_idx.len());
            cost.push(upper[j]);
            lo.push(0.0);
            up.push(f64::INFINITY);
        }
    }
    let ncols = cost.len();
    let mut form = CompForm {
        m: n,
        n: ncols,
        col_start,
        row_idx,
        vals,
        cost,
        lower: lo,
        upper: up,
        row_lower: c.clone(),
        row_upper: c,
    };
    let (rs, cs) = form.scale();
    let res = simplex::solve(&form);
    match res.outcome {
        Outcome::Optimal => {}
        Outcome::Unbounded => {
            let mut sol = Solution::without_point(Status::Infeasible, n, m);
            sol.iterations = res.iterations;
            return Some(sol);
        }
        Outcome::Infeasible => return None,
        Outcome::Stalled => {
            let mut sol = Solution::without_point(Status::Stalled, n, m);
            sol.iterations = res.iterations;
            return Some(sol);
        }
    }
    let x: Vec<f64> = res.y.iter().zip(&rs).map(|(v, s)| -v * s).collect();
    let y: Vec<f64> = res.x[..m].iter().zip(&cs[..m]).map(|(v, s)| v * s).collect();
    Some(finalize(lp, lower, upper, x, y, res.iterations))
}

/// `y` holds duals of the minimization form.
fn finalize(
    lp: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    mut x: Vec<f64>,
    mut y: Vec<f64>,
    iterations: usize,
) -> Solution {
    for (j, v) in x.iter_mut().enumerate() {
        let tol = 1e-7 * (1.0 + v.abs());
        if *v < lower[j] && *v > lower[j] - tol {
            *v = lower[j];
        }
        if *v > upper[j] && *v < upper[j] + tol {
            *v = upper[j];
        }
    }
    if lp.sense() == Sense::Maximize {
        for v in y.iter_mut() {
            *v = -*v;
        }
    }
    let c = lp.objective();
    let mut reduced = c.to_vec();
    let mut dual_obj = lp.offset();
    for (r, row) in lp.rows().iter().enumerate() {
        for &(j, a) in &row.coeffs {
            reduced[j] -= y[r] * a;
        }
        dual_obj += y[r] * row.rhs;
    }
    for j in 0..x.len() {
        let d = reduced[j];
        let at = nearest_bound(x[j], lower[j], upper[j]);
        dual_obj += d * at;
    }
    Solution {
        status: Status::Optimal,
        objective: lp.evaluate(&x),
        values: x,
        duals: y,
        reduced_costs: reduced,
        dual_objective: dual_obj,
        iterations,
        nodes: 0,
    }
}

fn nearest_bound(x: f64, lo: f64, up: f64) -> f64 {
    match (lo.is_finite(), up.is_finite()) {
        (true, true) => {
            if (x - lo).abs() <= (up - x).abs() {
                lo
            } else {
                up
            }
        }
        (true, false) => lo,
        (false, true) => up,
        (false, false) => x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LinearProgram, Relation};

    fn diet() -> LinearProgram {
        // min 2a + 3b  s.t.  a + b >= 4, a + 3b >= 5, a <= 3
        let mut lp = LinearProgram::minimize();
        let a = lp.add_var("a", 0.0, 3.0);
        let b = lp.add_var("b", 0.0, f64::INFINITY);
        lp.set_objective(a, 2.0);
        lp.set_objective(b, 3.0);
        lp.add_constraint("r0", [(a, 1.0), (b, 1.0)], Relation::Ge, 4.0);
        lp.add_constraint("r1", [(a, 1.0), (b, 3.0)], Relation::Ge, 5.0);
        lp
    }

    #[test]
    fn primal_and_dual_routes_agree() {
        let lp = diet();
        let lower = [0.0, 0.0];
        let upper = [3.0, f64::INFINITY];
        let p = primal_route(&lp, &lower, &upper);
        let d = dual_route(&lp, &lower, &upper).unwrap();
        assert_eq!(p.status, Status::Optimal);
        assert_eq!(d.status, Status::Optimal);
        // a = 3, b = 1 gives 9
        assert!((p.objective - 9.0).abs() < 1e-9);
        assert!((d.objective - 9.0).abs() < 1e-9);
        for (u, v) in p.duals.iter().zip(&d.duals) {
            assert!((u - v).abs() < 1e-9);
        }
        assert!((p.dual_objective - 9.0).abs() < 1e-9);
    }

    #[test]
    fn maximize_reports_shadow_prices() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::maximize();
        let x = lp.add_var("x", 0.0, f64::INFINITY);
        let y = lp.add_var("y", 0.0, f64::INFINITY);
        lp.set_objective(x, 1.0);
        lp.set_objective(y, 1.0);
        let r0 = lp.add_constraint("r0", [(x, 1.0), (y, 2.0)], Relation::Le, 4.0);
        let r1 = lp.add_constraint("r1", [(x, 3.0), (y, 1.0)], Relation::Le, 6.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 2.8).abs() < 1e-9);
        assert!((sol.dual(r0) - 0.4).abs() < 1e-9);
        assert!((sol.dual(r1) - 0.2).abs() < 1e-9);
    }

    #[test]
    fn unbounded_and_infeasible() {
        let mut lp = LinearProgram::minimize();
        let x = lp.add_free_var("x");
        lp.set_objective(x, 1.0);
        lp.add_constraint("r", [(x, 1.0)], Relation::Le, 3.0);
        assert_eq!(solve_lp(&lp).unwrap().status, Status::Unbounded);

        let mut lp = LinearProgram::minimize();
        let x = lp.add_var("x", 0.0, 1.0);
        lp.add_constraint("r", [(x, 1.0)], Relation::Ge, 2.0);
        assert_eq!(solve_lp(&lp).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn many_rows_use_dual_route_consistently() {
        // min t s.t. t >= k/10 - x, t >= x - k/10 for k in 0..40, 0 <= x <= 4
        let mut lp = LinearProgram::minimize();
        let x = lp.add_var("x", 0.0, 4.0);
        let t = lp.add_free_var("t");
        lp.set_objective(t, 1.0);
        for k in 0..40 {
            let v = k as f64 / 10.0;
            lp.add_constraint(format!("a{k}"), [(t, 1.0), (x, 1.0)], Relation::Ge, v);
            lp.add_constraint(format!("b{k}"), [(t, 1.0), (x, -1.0)], Relation::Ge, -v);
        }
        let bounds = |f: fn(&super::super::Variable) -> f64| lp.vars().iter().map(f).collect::<Vec<_>>();
        let (lower, upper) = (bounds(|v| v.lower), bounds(|v| v.upper));
        for sol in [solve_lp(&lp).unwrap(), dual_route(&lp, &lower, &upper).unwrap()] {
            assert!((sol.objective - 1.95).abs() < 1e-9);
            assert!((sol.dual_objective - 1.95).abs() < 1e-9);
        }
    }
}
