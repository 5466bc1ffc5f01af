use std::collections::{HashMap, HashSet, VecDeque};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WEIBULL_SHAPE: f64 = 0.8;
pub const WEIBULL_MEDIAN: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: String,
    pub v: String,
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_prob: Option<f64>,
}

/// Undirected simple graph with link capacities and failure probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
}

/// Index-based adjacency view of a topology.
#[derive(Debug, Clone)]
pub(crate) struct Graph {
    /// `(neighbor, edge index)` sorted by neighbor.
    pub adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Hop-shortest path from `s` to `t` avoiding `banned` edges; returns
    /// the node sequence. Ties go to lower node indices.
    pub fn shortest_path(&self, s: usize, t: usize, banned: &[bool]) -> Option<Vec<usize>> {
        let n = self.adj.len();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        seen[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &(v, e) in &self.adj[u] {
                if !seen[v] && !banned[e] {
                    seen[v] = true;
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if !seen[t] {
            return None;
        }
        let mut path = vec![t];
        let mut cur = t;
        while cur != s {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adj[a].iter().find(|&&(v, _)| v == b).map(|&(_, e)| e)
    }

    /// Edge indices along a node path.
    pub fn path_edges(&self, path: &[usize]) -> Vec<usize> {
        path.windows(2)
            .map(|w| self.edge_between(w[0], w[1]).expect("consecutive path nodes are adjacent"))
            .collect()
    }
}

impl Topology {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let t: Topology = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn from_json_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut t = Self::from_json_str(&text)?;
        if t.name.is_none() {
            t.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(t)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("topology")
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for n in &self.nodes {
            if !names.insert(n.as_str()) {
                return Err(Error::validation(format!("duplicate node {n}")));
            }
        }
        let mut pairs = HashSet::new();
        for e in &self.edges {
            if !names.contains(e.u.as_str()) || !names.contains(e.v.as_str()) {
                return Err(Error::validation(format!("edge {}-{} references an unknown node", e.u, e.v)));
            }
            if e.u == e.v {
                return Err(Error::validation(format!("self-loop at {}", e.u)));
            }
            let key = if e.u < e.v { (&e.u, &e.v) } else { (&e.v, &e.u) };
            if !pairs.insert(key) {
                return Err(Error::validation(format!("parallel edge {}-{}", e.u, e.v)));
            }
            if !(e.capacity >= 0.0 && e.capacity.is_finite()) {
                return Err(Error::validation(format!("edge {}-{} has capacity {}", e.u, e.v, e.capacity)));
            }
            if let Some(p) = e.fail_prob {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::validation(format!("edge {}-{} has failure probability {p}", e.u, e.v)));
                }
            }
        }
        Ok(())
    }

    pub fn node_index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
    }

    pub(crate) fn graph(&self) -> Graph {
        let idx = self.node_index();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            let (a, b) = (idx[e.u.as_str()], idx[e.v.as_str()]);
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        Graph { adj }
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let g = self.graph();
        let banned = vec![false; self.edges.len()];
        (1..self.nodes.len()).all(|t| g.shortest_path(0, t, &banned).is_some())
    }

    /// Total capacity of the links at each node.
    pub fn node_weights(&self) -> Vec<f64> {
        let idx = self.node_index();
        let mut w = vec![0.0; self.nodes.len()];
        for e in &self.edges {
            w[idx[e.u.as_str()]] += e.capacity;
            w[idx[e.v.as_str()]] += e.capacity;
        }
        w
    }

    /// Three nodes, capacity 10 on every link.
    pub fn triangle() -> Self {
        let edge = |u: &str, v: &str| Edge {
            u: u.into(),
            v: v.into(),
            capacity: 10.0,
            fail_prob: None,
        };
        Topology {
            name: Some("Triangle".into()),
            nodes: vec!["a".into(), "b".into(), "c".into()],
            edges: vec![edge("a", "b"), edge("b", "c"), edge("a", "c")],
        }
    }

    /// A 12-site, 19-link wide-area topology with seeded capacities drawn
    /// from {40, 100, 200}. Every node has degree at least 2.
    pub fn b4_like(seed: u64) -> Self {
        use rand::Rng;
        const LINKS: [(usize, usize); 19] = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 8),
            (8, 9),
            (9, 10),
            (10, 11),
            (11, 0),
            (0, 2),
            (1, 5),
            (3, 8),
            (4, 9),
            (6, 10),
            (7, 11),
            (2, 7),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes: Vec<String> = (0..12).map(|i| format!("s{i}")).collect();
        let edges = LINKS
            .iter()
            .map(|&(a, b)| Edge {
                u: nodes[a].clone(),
                v: nodes[b].clone(),
                capacity: [40.0, 100.0, 200.0][rng.random_range(0..3)],
                fail_prob: None,
            })
            .collect();
        Topology {
            name: Some("B4".into()),
            nodes,
            edges,
        }
    }
}

/// Remove vertices of degree at most one until none remain. Returns the
/// pruned topology and the removed node names.
pub fn prune_topology(t: &Topology) -> Result<(Topology, Vec<String>)> {
    let g = t.graph();
    let n = t.nodes.len();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = g.adj.iter().map(Vec::len).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&v| degree[v] <= 1).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &(u, _) in &g.adj[v] {
            if alive[u] {
                degree[u] -= 1;
                if degree[u] == 1 {
                    stack.push(u);
                }
            }
        }
    }
    let removed: Vec<String> = (0..n).filter(|&v| !alive[v]).map(|v| t.nodes[v].clone()).collect();
    if removed.len() == n {
        return Err(Error::validation(format!("{} is empty after pruning", t.label())));
    }
    let keep: HashSet<&str> = (0..n).filter(|&v| alive[v]).map(|v| t.nodes[v].as_str()).collect();
    let pruned = Topology {
        name: t.name.clone(),
        nodes: t.nodes.iter().filter(|v| keep.contains(v.as_str())).cloned().collect(),
        edges: t
            .edges
            .iter()
            .filter(|e| keep.contains(e.u.as_str()) && keep.contains(e.v.as_str()))
            .cloned()
            .collect(),
    };
    if !removed.is_empty() {
        log::info!("pruned {} nodes from {}: {:?}", removed.len(), t.label(), removed);
    }
    Ok((pruned, removed))
}

/// Scale of the Weibull law with shape 0.8 whose median is 0.001.
pub fn weibull_scale() -> f64 {
    WEIBULL_MEDIAN / std::f64::consts::LN_2.powf(1.0 / WEIBULL_SHAPE)
}

/// `count` failure probabilities drawn from the Weibull law.
pub fn sample_weibull(count: usize, seed: u64) -> Vec<f64> {
    let law = Weibull::new(weibull_scale(), WEIBULL_SHAPE).expect("valid Weibull parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| law.sample(&mut rng).clamp(f64::MIN_POSITIVE, 1.0 - 1e-12))
        .collect()
}

/// Assign every link a seeded Weibull failure probability.
pub fn sample_link_failures(t: &Topology, seed: u64) -> Topology {
    let probs = sample_weibull(t.edges.len(), seed);
    let mut out = t.clone();
    for (e, p) in out.edges.iter_mut().zip(probs) {
        e.fail_prob = Some(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(u: &str, v: &str) -> Edge {
        Edge {
            u: u.into(),
            v: v.into(),
            capacity: 1.0,
            fail_prob: None,
        }
    }

    fn topo(nodes: &[&str], edges: &[(&str, &str)]) -> Topology {
        Topology {
            name: None,
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            edges: edges.iter().map(|&(u, v)| edge(u, v)).collect(),
        }
    }

    #[test]
    fn pruning() {
        let path = topo(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        assert!(prune_topology(&path).is_err());

        let tri = Topology::triangle();
        assert_eq!(prune_topology(&tri).unwrap().0, tri);

        let pendant = topo(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("a", "c"), ("d", "a")]);
        let (pruned, removed) = prune_topology(&pendant).unwrap();
        assert_eq!(removed, vec!["d".to_string()]);
        assert_eq!(pruned.nodes.len(), 3);
        assert_eq!(pruned.edges.len(), 3);
    }

    #[test]
    fn b4_dimensions() {
        let t = Topology::b4_like(1);
        assert_eq!(t.nodes.len(), 12);
        assert_eq!(t.edges.len(), 19);
        t.validate().unwrap();
        assert!(t.is_connected());
        assert_eq!(prune_topology(&t).unwrap().1.len(), 0);
        assert_eq!(Topology::b4_like(1), t);
    }

    #[test]
    fn weibull_median_and_determinism() {
        let mut draws = sample_weibull(10_000, 3);
        assert!(draws.iter().all(|&p| p > 0.0));
        assert_eq!(draws, sample_weibull(10_000, 3));
        draws.sort_by(f64::total_cmp);
        let median = 0.5 * (draws[4999] + draws[5000]);
        assert!((0.0008..=0.0012).contains(&median), "median {median}");
    }

    #[test]
    fn json_validation() {
        let text = r#"{"nodes":["a","b"],"edges":[{"u":"a","v":"b","capacity":5,"fail_prob":0.01}]}"#;
        let t = Topology::from_json_str(text).unwrap();
        assert_eq!(t.edges[0].fail_prob, Some(0.01));
        let bad = r#"{"nodes":["a","b"],"edges":[{"u":"a","v":"z","capacity":5}]}"#;
        assert!(Topology::from_json_str(bad).is_err());
        let dup = r#"{"nodes":["a","b"],"edges":[{"u":"a","v":"b","capacity":5},{"u":"b","v":"a","capacity":1}]}"#;
        assert!(Topology::from_json_str(dup).is_err());
    }
}
