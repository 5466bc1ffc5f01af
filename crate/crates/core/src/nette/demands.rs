use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::topology::Topology;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub src: String,
    pub dst: String,
    pub demand: f64,
}

/// Demands between unordered node pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandMatrix {
    pub entries: Vec<Demand>,
}

impl DemandMatrix {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        self.entries.iter().map(|d| (d.src.clone(), d.dst.clone())).collect()
    }

    pub fn validate(&self, t: &Topology) -> Result<()> {
        let idx = t.node_index();
        for d in &self.entries {
            if !idx.contains_key(d.src.as_str()) || !idx.contains_key(d.dst.as_str()) {
                return Err(Error::validation(format!("demand {}->{} references an unknown node", d.src, d.dst)));
            }
            if d.src == d.dst {
                return Err(Error::validation(format!("demand from {} to itself", d.src)));
            }
            if !(d.demand > 0.0 && d.demand.is_finite()) {
                return Err(Error::validation(format!("demand {}->{} is {}", d.src, d.dst, d.demand)));
            }
        }
        Ok(())
    }

    /// Drop demands whose endpoints are not in `t`.
    pub fn restrict_to(&self, t: &Topology) -> DemandMatrix {
        let idx = t.node_index();
        let (keep, drop): (Vec<_>, Vec<_>) = self
            .entries
            .iter()
            .cloned()
            .partition(|d| idx.contains_key(d.src.as_str()) && idx.contains_key(d.dst.as_str()));
        for d in &drop {
            log::warn!("dropping demand {}->{}: endpoint pruned", d.src, d.dst);
        }
        DemandMatrix { entries: keep }
    }

    pub fn from_csv_reader<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let entries = rdr.deserialize().collect::<std::result::Result<Vec<Demand>, _>>()?;
        Ok(Self { entries })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(f)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for d in &self.entries {
            wtr.serialize(d)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Link loads when every demand follows its hop-shortest path.
pub fn shortest_path_loads(t: &Topology, d: &DemandMatrix) -> Result<Vec<f64>> {
    let g = t.graph();
    let idx = t.node_index();
    let banned: Vec<bool> = t.edges.iter().map(|e| e.capacity <= 0.0).collect();
    let mut load = vec![0.0; t.edges.len()];
    for dem in &d.entries {
        let (s, u) = (idx[dem.src.as_str()], idx[dem.dst.as_str()]);
        let path = g
            .shortest_path(s, u, &banned)
            .ok_or_else(|| Error::validation(format!("no path from {} to {}", dem.src, dem.dst)))?;
        for e in g.path_edges(&path) {
            load[e] += dem.demand;
        }
    }
    Ok(load)
}

/// Maximum link utilization under shortest-path routing.
pub fn shortest_path_mlu(t: &Topology, d: &DemandMatrix) -> Result<f64> {
    let load = shortest_path_loads(t, d)?;
    Ok(load
        .iter()
        .zip(&t.edges)
        .filter(|(_, e)| e.capacity > 0.0)
        .map(|(l, e)| l / e.capacity)
        .fold(0.0, f64::max))
}

/// Gravity demands `d(s, t) ∝ w_s w_t` over all unordered pairs, with
/// `w` the attached capacity, scaled so shortest-path routing reaches
/// `target_mlu`. A positive `jitter` multiplies each demand by a seeded
/// factor in `[1 − jitter, 1 + jitter]` before scaling.
pub fn gen_demands_gravity(t: &Topology, target_mlu: f64, seed: u64, jitter: f64) -> Result<DemandMatrix> {
    if !(target_mlu > 0.0 && target_mlu.is_finite()) {
        return Err(Error::validation(format!("target MLU must be positive, got {target_mlu}")));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::validation(format!("jitter must lie in [0, 1), got {jitter}")));
    }
    let w = t.node_weights();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for i in 0..t.nodes.len() {
        for j in i + 1..t.nodes.len() {
            let mut demand = w[i] * w[j];
            if jitter > 0.0 {
                demand *= 1.0 + jitter * rng.random_range(-1.0..=1.0);
            }
            if demand > 0.0 {
                entries.push(Demand {
                    src: t.nodes[i].clone(),
                    dst: t.nodes[j].clone(),
                    demand,
                });
            }
        }
    }
    let mut dm = DemandMatrix { entries };
    if dm.is_empty() {
        return Err(Error::validation("topology has no demand pairs"));
    }
    let mlu = shortest_path_mlu(t, &dm)?;
    let factor = target_mlu / mlu;
    for d in dm.entries.iter_mut() {
        d.demand *= factor;
    }
    Ok(dm)
}
