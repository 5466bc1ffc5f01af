//! Traffic-engineering instances: topologies, link failures, demands,
//! tunnels, failure scenarios and the resulting loss feasible sets.

pub mod case_study;
pub mod demands;
pub mod feasible;
pub mod scenarios;
pub mod topology;
pub mod tunnels;

pub use case_study::{prepare_instance, run_case_study, run_case_study_file, run_on_artifacts, CaseStudyConfig, TeArtifacts};
pub use demands::{gen_demands_gravity, shortest_path_mlu, Demand, DemandMatrix};
pub use feasible::{build_te_feasible_set, TeInstance};
pub use scenarios::{enumerate_scenarios, ResidualMode, Scenario, ScenarioSet};
pub use topology::{prune_topology, sample_link_failures, sample_weibull, weibull_scale, Edge, Topology};
pub use tunnels::{gen_tunnels, PairTunnels, TunnelSet};
