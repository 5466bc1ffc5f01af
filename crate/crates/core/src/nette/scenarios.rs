use std::path::Path;

use serde::{Deserialize, Serialize};

use super::topology::Topology;
use crate::error::{Error, Result};

/// What to do with the probability mass of scenarios below the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualMode {
    /// Rescale the kept scenarios to total mass one.
    #[default]
    Normalize,
    /// Add one extra scenario carrying the missing mass with loss forced to 1.
    Residual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Indices of failed edges, ascending.
    pub failed: Vec<usize>,
    pub prob: f64,
    /// The lumped scenario of [`ResidualMode::Residual`].
    pub residual: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    /// Mass of the enumerated scenarios before normalization.
    pub covered_mass: f64,
    pub mode: ResidualMode,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioRecord {
    failed: Vec<[String; 2]>,
    prob: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    residual: bool,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.prob).collect()
    }

    pub fn to_json_string(&self, t: &Topology) -> Result<String> {
        let records: Vec<ScenarioRecord> = self
            .scenarios
            .iter()
            .map(|s| ScenarioRecord {
                failed: s
                    .failed
                    .iter()
                    .map(|&e| [t.edges[e].u.clone(), t.edges[e].v.clone()])
                    .collect(),
                prob: s.prob,
                residual: s.residual,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&records)?)
    }

    pub fn from_json_str(text: &str, t: &Topology) -> Result<Self> {
        let records: Vec<ScenarioRecord> = serde_json::from_str(text)?;
        let g = t.graph();
        let idx = t.node_index();
        let mut scenarios = Vec::with_capacity(records.len());
        for r in records {
            let mut failed = r
                .failed
                .iter()
                .map(|[u, v]| {
                    let e = idx
                        .get(u.as_str())
                        .zip(idx.get(v.as_str()))
                        .and_then(|(&a, &b)| g.edge_between(a, b));
                    e.ok_or_else(|| Error::validation(format!("scenario names unknown link {u}-{v}")))
                })
                .collect::<Result<Vec<_>>>()?;
            failed.sort_unstable();
            scenarios.push(Scenario {
                failed,
                prob: r.prob,
                residual: r.residual,
            });
        }
        crate::distribution::validate_probs(&scenarios.iter().map(|s| s.prob).collect::<Vec<_>>())?;
        let mode = if scenarios.iter().any(|s| s.residual) {
            ResidualMode::Residual
        } else {
            ResidualMode::Normalize
        };
        Ok(Self {
            scenarios,
            covered_mass: 1.0,
            mode,
        })
    }

    pub fn from_json_path(path: &Path, t: &Topology) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, t)
    }
}

/// Every failure set with probability at least `threshold` under
/// independent link failures. The no-failure scenario comes first, the
/// rest by decreasing probability.
pub fn enumerate_scenarios(t: &Topology, threshold: f64, mode: ResidualMode) -> Result<ScenarioSet> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::validation(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let p = t
        .edges
        .iter()
        .map(|e| {
            e.fail_prob
                .ok_or_else(|| Error::validation(format!("link {}-{} has no failure probability", e.u, e.v)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = p.len();
    // Largest probability any completion of a prefix can reach.
    let mut best_suffix = vec![1.0; m + 1];
    for e in (0..m).rev() {
        best_suffix[e] = best_suffix[e + 1] * p[e].max(1.0 - p[e]);
    }
    let mut found = Vec::new();
    let mut stack = vec![(0usize, 1.0f64, Vec::new())];
    while let Some((e, prob, failed)) = stack.pop() {
        if prob * best_suffix[e] < threshold {
            continue;
        }
        if e == m {
            found.push(Scenario {
                failed,
                prob,
                residual: false,
            });
            continue;
        }
        let mut with = failed.clone();
        with.push(e);
        stack.push((e + 1, prob * p[e], with));
        stack.push((e + 1, prob * (1.0 - p[e]), failed));
    }
    found.sort_by(|a, b| {
        (!a.failed.is_empty())
            .cmp(&!b.failed.is_empty())
            .then(b.prob.total_cmp(&a.prob))
            .then(a.failed.cmp(&b.failed))
    });
    let covered_mass: f64 = found.iter().map(|s| s.prob).sum();
    if found.is_empty() {
        return Err(Error::validation(format!("no scenario reaches probability {threshold}")));
    }
    match mode {
        ResidualMode::Normalize => {
            for s in found.iter_mut() {
                s.prob /= covered_mass;
            }
        }
        ResidualMode::Residual => {
            let rest = 1.0 - covered_mass;
            if rest > 0.0 {
                found.push(Scenario {
                    failed: Vec::new(),
                    prob: rest,
                    residual: true,
                });
            }
        }
    }
    log::info!(
        "{}: {} scenarios at threshold {threshold}, covering mass {covered_mass}",
        t.label(),
        found.len()
    );
    Ok(ScenarioSet {
        scenarios: found,
        covered_mass,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nette::topology::sample_link_failures;

    fn triangle(p: [f64; 3]) -> Topology {
        let mut t = Topology::triangle();
        for (e, q) in t.edges.iter_mut().zip(p) {
            e.fail_prob = Some(q);
        }
        t
    }

    /// All `2^m` failure sets by brute force.
    fn brute(t: &Topology) -> Vec<(Vec<usize>, f64)> {
        let m = t.edges.len();
        (0..1u32 << m)
            .map(|mask| {
                let failed: Vec<usize> = (0..m).filter(|&e| mask >> e & 1 == 1).collect();
                let prob = t
                    .edges
                    .iter()
                    .enumerate()
                    .map(|(e, x)| {
                        let q = x.fail_prob.unwrap();
                        if mask >> e & 1 == 1 {
                            q
                        } else {
                            1.0 - q
                        }
                    })
                    .product();
                (failed, prob)
            })
            .collect()
    }

    #[test]
    fn matches_brute_force() {
        let t = sample_link_failures(&Topology::b4_like(3), 9);
        let t = Topology {
            edges: t.edges[..10].to_vec(),
            ..t
        };
        for threshold in [1e-3, 1e-4, 1e-6] {
            let set = enumerate_scenarios(&t, threshold, ResidualMode::Residual).unwrap();
            let mut expected: Vec<_> = brute(&t).into_iter().filter(|(_, p)| *p >= threshold).collect();
            expected.sort_by(|a, b| a.0.cmp(&b.0));
            let mut got: Vec<_> = set
                .scenarios
                .iter()
                .filter(|s| !s.residual)
                .map(|s| (s.failed.clone(), s.prob))
                .collect();
            got.sort_by(|a, b| a.0.cmp(&b.0));
            assert_eq!(got.len(), expected.len());
            for (g, e) in got.iter().zip(&expected) {
                assert_eq!(g.0, e.0);
                assert!((g.1 - e.1).abs() < 1e-15);
            }
            let total: f64 = set.probs().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ordering_and_normalization() {
        let t = triangle([0.1, 0.01, 0.05]);
        let set = enumerate_scenarios(&t, 1e-3, ResidualMode::Normalize).unwrap();
        assert!(set.scenarios[0].failed.is_empty());
        assert!(set.scenarios[1..].windows(2).all(|w| w[0].prob >= w[1].prob));
        assert!((set.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(set.covered_mass < 1.0);
        // Single failures plus the double failure of a-b and a-c.
        assert_eq!(set.len(), 5);
    }

    #[test]
    fn json_round_trip() {
        let t = triangle([0.1, 0.2, 0.3]);
        let set = enumerate_scenarios(&t, 0.05, ResidualMode::Residual).unwrap();
        let text = set.to_json_string(&t).unwrap();
        let back = ScenarioSet::from_json_str(&text, &t).unwrap();
        assert_eq!(back.scenarios, set.scenarios);
    }

    #[test]
    fn needs_probabilities() {
        assert!(enumerate_scenarios(&Topology::triangle(), 1e-3, ResidualMode::Normalize).is_err());
    }
}
