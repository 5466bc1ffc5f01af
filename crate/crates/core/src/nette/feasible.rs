use super::demands::DemandMatrix;
use super::scenarios::ScenarioSet;
use super::topology::Topology;
use super::tunnels::TunnelSet;
use crate::error::{Error, Result};
use crate::model::FeasibleSet;

/// A traffic-engineering feasible set: `x` holds the tunnel allocations
/// `X_pt` and `T_q` is the largest fraction of demand lost in scenario `q`.
#[derive(Debug, Clone)]
pub struct TeInstance {
    pub fs: FeasibleSet,
    pub probs: Vec<f64>,
    /// `(pair, tunnel)` for each column of `x`.
    pub columns: Vec<(usize, usize)>,
}

/// Build `{(X, t) : t_q >= 1 − Σ_t Y_tq X_pt / d_p, Σ_{t ∋ e} X_pt <= c_e,
/// X >= 0, 0 <= t <= 1}` where `Y_tq` is 1 if tunnel `t` survives `q`.
pub fn build_te_feasible_set(
    t: &Topology,
    d: &DemandMatrix,
    tunnels: &TunnelSet,
    scenarios: &ScenarioSet,
) -> Result<TeInstance> {
    d.validate(t)?;
    if scenarios.is_empty() {
        return Err(Error::validation("no scenarios"));
    }
    let paths = tunnels.edge_paths(t)?;
    let mut columns = Vec::new();
    let mut names = Vec::new();
    let mut pair_of_demand = Vec::with_capacity(d.len());
    for dem in &d.entries {
        let p = tunnels
            .pairs
            .iter()
            .position(|pt| pt.src == dem.src && pt.dst == dem.dst)
            .ok_or_else(|| Error::validation(format!("no tunnels for demand {}->{}", dem.src, dem.dst)))?;
        pair_of_demand.push(p);
    }
    let mut first_col = Vec::with_capacity(d.len());
    for (di, &p) in pair_of_demand.iter().enumerate() {
        first_col.push(columns.len());
        for k in 0..paths[p].len() {
            columns.push((p, k));
            names.push(format!("X_{}_{}_{k}", d.entries[di].src, d.entries[di].dst));
        }
    }
    let k = columns.len();
    let n = scenarios.len();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    let mut push = |ax: Vec<f64>, bt: Vec<f64>, rhs: f64| {
        a.push(ax);
        b.push(bt);
        c.push(rhs);
    };

    for (q, s) in scenarios.scenarios.iter().enumerate() {
        let mut bt = vec![0.0; n];
        bt[q] = -1.0;
        if s.residual {
            push(vec![0.0; k], bt, -1.0);
            continue;
        }
        let mut down = vec![false; t.edges.len()];
        for &e in &s.failed {
            down[e] = true;
        }
        for (di, &p) in pair_of_demand.iter().enumerate() {
            let mut ax = vec![0.0; k];
            for (tk, path) in paths[p].iter().enumerate() {
                if path.iter().all(|&e| !down[e]) {
                    ax[first_col[di] + tk] = -1.0 / d.entries[di].demand;
                }
            }
            push(ax, bt.clone(), -1.0);
        }
    }
    for (e, edge) in t.edges.iter().enumerate() {
        let mut ax = vec![0.0; k];
        let mut used = false;
        for (di, &p) in pair_of_demand.iter().enumerate() {
            for (tk, path) in paths[p].iter().enumerate() {
                if path.contains(&e) {
                    ax[first_col[di] + tk] = 1.0;
                    used = true;
                }
            }
        }
        if used {
            push(ax, vec![0.0; n], edge.capacity);
        }
    }
    for j in 0..k {
        let mut ax = vec![0.0; k];
        ax[j] = -1.0;
        push(ax, vec![0.0; n], 0.0);
    }
    for q in 0..n {
        let mut bt = vec![0.0; n];
        bt[q] = -1.0;
        push(vec![0.0; k], bt.clone(), 0.0);
        bt[q] = 1.0;
        push(vec![0.0; k], bt, 1.0);
    }
    let fs = FeasibleSet::new(a, b, c, names)?;
    Ok(TeInstance {
        fs,
        probs: scenarios.probs(),
        columns,
    })
}
