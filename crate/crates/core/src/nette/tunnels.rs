use std::path::Path;

use serde::{Deserialize, Serialize};

use super::topology::Topology;
use crate::error::{Error, Result};

/// Candidate paths (as node sequences) for one demand pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTunnels {
    pub src: String,
    pub dst: String,
    pub tunnels: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TunnelSet {
    pub pairs: Vec<PairTunnels>,
}

impl TunnelSet {
    pub fn total(&self) -> usize {
        self.pairs.iter().map(|p| p.tunnels.len()).sum()
    }

    pub fn find(&self, src: &str, dst: &str) -> Option<&PairTunnels> {
        self.pairs.iter().find(|p| p.src == src && p.dst == dst)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Edge indices of every tunnel, checking that each is a simple path
    /// in `t` joining its pair.
    pub fn edge_paths(&self, t: &Topology) -> Result<Vec<Vec<Vec<usize>>>> {
        let g = t.graph();
        let idx = t.node_index();
        self.pairs
            .iter()
            .map(|p| {
                if p.tunnels.is_empty() {
                    return Err(Error::validation(format!("pair {}->{} has no tunnel", p.src, p.dst)));
                }
                p.tunnels
                    .iter()
                    .map(|path| {
                        let bad = || Error::validation(format!("invalid tunnel {path:?} for {}->{}", p.src, p.dst));
                        if path.first() != Some(&p.src) || path.last() != Some(&p.dst) {
                            return Err(bad());
                        }
                        let nodes = path
                            .iter()
                            .map(|v| idx.get(v.as_str()).copied().ok_or_else(bad))
                            .collect::<Result<Vec<_>>>()?;
                        let mut seen = nodes.clone();
                        seen.sort_unstable();
                        seen.dedup();
                        if seen.len() != nodes.len() {
                            return Err(bad());
                        }
                        nodes
                            .windows(2)
                            .map(|w| g.edge_between(w[0], w[1]).ok_or_else(bad))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Two tunnels per pair: the hop-shortest path, then the shortest path
/// edge-disjoint from it, else the second-shortest simple path. Pairs with
/// only one path get a single tunnel.
pub fn gen_tunnels(t: &Topology, pairs: &[(String, String)]) -> Result<TunnelSet> {
    let g = t.graph();
    let idx = t.node_index();
    let names = |path: Vec<usize>| -> Vec<String> { path.into_iter().map(|v| t.nodes[v].clone()).collect() };
    let mut out = Vec::with_capacity(pairs.len());
    for (src, dst) in pairs {
        let (Some(&s), Some(&u)) = (idx.get(src.as_str()), idx.get(dst.as_str())) else {
            return Err(Error::validation(format!("pair {src}->{dst} references an unknown node")));
        };
        let mut banned = vec![false; t.edges.len()];
        let first = g
            .shortest_path(s, u, &banned)
            .ok_or_else(|| Error::validation(format!("no path from {src} to {dst}")))?;
        let first_edges = g.path_edges(&first);
        for &e in &first_edges {
            banned[e] = true;
        }
        let second = g.shortest_path(s, u, &banned).or_else(|| {
            let mut best: Option<Vec<usize>> = None;
            for &e in &first_edges {
                let mut ban = vec![false; t.edges.len()];
                ban[e] = true;
                if let Some(p) = g.shortest_path(s, u, &ban) {
                    if best.as_ref().is_none_or(|b| p.len() < b.len()) {
                        best = Some(p);
                    }
                }
            }
            best
        });
        let mut tunnels = vec![names(first)];
        match second {
            Some(p) => tunnels.push(names(p)),
            None => log::warn!("only one path between {src} and {dst}"),
        }
        out.push(PairTunnels {
            src: src.clone(),
            dst: dst.clone(),
            tunnels,
        });
    }
    Ok(TunnelSet { pairs: out })
}
