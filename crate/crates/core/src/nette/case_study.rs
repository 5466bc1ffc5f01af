use std::path::Path;

use super::demands::{gen_demands_gravity, DemandMatrix};
use super::feasible::{build_te_feasible_set, TeInstance};
use super::scenarios::{enumerate_scenarios, ResidualMode, ScenarioSet};
use super::topology::{prune_topology, sample_link_failures, Topology};
use super::tunnels::{gen_tunnels, TunnelSet};
use crate::error::Result;
use crate::estimators::{estimate_var_min, EstimateConfig, EstimateReport};
use crate::model::BigM;

pub const DEFAULT_GAMMAS: [f64; 3] = [0.8, 0.9, 0.99];
pub const DEFAULT_TARGET_MLU: f64 = 0.6;
pub const DEFAULT_PROB_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyConfig {
    pub gammas: Vec<f64>,
    pub target_mlu: f64,
    pub prob_threshold: f64,
    pub seed: u64,
    pub jitter: f64,
    pub mode: ResidualMode,
    /// Keep failure probabilities already present on every link.
    pub keep_fail_probs: bool,
    pub estimate: EstimateConfig,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        Self {
            gammas: DEFAULT_GAMMAS.to_vec(),
            target_mlu: DEFAULT_TARGET_MLU,
            prob_threshold: DEFAULT_PROB_THRESHOLD,
            seed: 0,
            jitter: 0.0,
            mode: ResidualMode::Normalize,
            keep_fail_probs: true,
            estimate: EstimateConfig {
                with_ip_true: true,
                big_m: BigM::Uniform(1.0),
                ..EstimateConfig::default()
            },
        }
    }
}

/// Everything generated on the way to a TE instance.
#[derive(Debug, Clone)]
pub struct TeArtifacts {
    pub topology: Topology,
    pub removed_nodes: Vec<String>,
    pub demands: DemandMatrix,
    pub tunnels: TunnelSet,
    pub scenarios: ScenarioSet,
    pub instance: TeInstance,
}

/// Prune, assign failure probabilities, generate demands and tunnels,
/// enumerate scenarios and build the feasible set.
pub fn prepare_instance(t: &Topology, cfg: &CaseStudyConfig) -> Result<TeArtifacts> {
    t.validate()?;
    let (pruned, removed_nodes) = prune_topology(t)?;
    let topology = if cfg.keep_fail_probs && pruned.edges.iter().all(|e| e.fail_prob.is_some()) {
        pruned
    } else {
        sample_link_failures(&pruned, cfg.seed)
    };
    let demands = gen_demands_gravity(&topology, cfg.target_mlu, cfg.seed, cfg.jitter)?;
    let tunnels = gen_tunnels(&topology, &demands.pairs())?;
    let scenarios = enumerate_scenarios(&topology, cfg.prob_threshold, cfg.mode)?;
    let instance = build_te_feasible_set(&topology, &demands, &tunnels, &scenarios)?;
    Ok(TeArtifacts {
        topology,
        removed_nodes,
        demands,
        tunnels,
        scenarios,
        instance,
    })
}

/// One report per `gamma`, labelled `"Name (gamma)"`.
pub fn run_case_study(t: &Topology, cfg: &CaseStudyConfig) -> Result<Vec<EstimateReport>> {
    let art = prepare_instance(t, cfg)?;
    run_on_artifacts(&art, cfg)
}

pub fn run_on_artifacts(art: &TeArtifacts, cfg: &CaseStudyConfig) -> Result<Vec<EstimateReport>> {
    let name = art.topology.label().to_string();
    let mut reports = Vec::with_capacity(cfg.gammas.len());
    for &gamma in &cfg.gammas {
        let est = EstimateConfig {
            label: format!("{name} ({gamma})"),
            ..cfg.estimate.clone()
        };
        log::info!("{}: {} scenarios, {} tunnels", est.label, art.scenarios.len(), art.tunnels.total());
        let mut r = estimate_var_min(&art.instance.fs, &art.instance.probs, gamma, &est)?;
        r.metadata.insert("target_mlu".into(), cfg.target_mlu.to_string());
        r.metadata.insert("prob_threshold".into(), cfg.prob_threshold.to_string());
        r.metadata.insert("seed".into(), cfg.seed.to_string());
        r.metadata.insert("scenarios".into(), art.scenarios.len().to_string());
        r.metadata.insert("covered_mass".into(), art.scenarios.covered_mass.to_string());
        reports.push(r);
    }
    Ok(reports)
}

pub fn run_case_study_file(path: &Path, cfg: &CaseStudyConfig) -> Result<Vec<EstimateReport>> {
    run_case_study(&Topology::from_json_path(path)?, cfg)
}
