mod common;

use agrisk::estimators::{estimate_var_min, gap_metrics, EstimateConfig};
use agrisk::model::BigM;
use agrisk::nette::{
    enumerate_scenarios, prepare_instance, run_case_study, sample_weibull, CaseStudyConfig, ResidualMode, Topology,
};
use rand::Rng;

#[test]
fn estimates_bracket_the_integer_optimum() {
    let mut rng = common::rng(21);
    for _ in 0..20 {
        let (k, n) = (rng.random_range(1..=3), rng.random_range(2..=6));
        let fs = common::random_feasible_set(&mut rng, k, n);
        let probs = common::random_probs(&mut rng, n);
        let gamma = rng.random_range(0.5..0.95);
        let cfg = EstimateConfig {
            with_ip_true: true,
            ..EstimateConfig::default()
        };
        let r = gap_metrics(estimate_var_min(&fs, &probs, gamma, &cfg).unwrap());
        assert!(r.chain_violations().is_empty(), "{:?}", r.chain_violations());
        assert!(r.o3_monotone);
        assert!(r.g1.unwrap() >= -1e-6);
        assert!(r.our_g.unwrap() >= -1e-6);
    }
}

#[test]
fn b4_dimensions_and_scenarios() {
    let t = Topology::b4_like(3);
    assert_eq!(t.nodes.len(), 12);
    assert_eq!(t.edges.len(), 19);
    assert!(t.is_connected());
    let cfg = CaseStudyConfig {
        seed: 3,
        ..CaseStudyConfig::default()
    };
    let art = prepare_instance(&t, &cfg).unwrap();
    assert!(art.removed_nodes.is_empty());
    assert!(art.topology.edges.iter().all(|e| e.fail_prob.is_some()));
    let set = enumerate_scenarios(&art.topology, 1e-4, ResidualMode::Normalize).unwrap();
    assert!(set.scenarios[0].failed.is_empty());
    assert!(set.scenarios.iter().any(|s| s.failed.len() == 1));
    assert!(set.len() > art.scenarios.len());
    assert_eq!(art.instance.probs.len(), art.scenarios.len());
    assert_eq!(art.instance.fs.n(), art.scenarios.len());
}

#[test]
fn triangle_case_study_is_reproducible() {
    let cfg = CaseStudyConfig {
        seed: 5,
        ..CaseStudyConfig::default()
    };
    let first = run_case_study(&Topology::triangle(), &cfg).unwrap();
    let second = run_case_study(&Topology::triangle(), &cfg).unwrap();
    assert_eq!(first.len(), 3);
    for (a, b) in first.iter().zip(&second) {
        assert!(a.chain_violations().is_empty(), "{:?}", a.chain_violations());
        assert_eq!((a.u1, a.u2, a.o1, a.o2, a.ip_true), (b.u1, b.u2, b.o1, b.o2, b.ip_true));
        assert_eq!(a.metadata.get("seed").map(String::as_str), Some("5"));
    }
}

#[test]
fn residual_mode_adds_one_scenario() {
    let t = agrisk::nette::sample_link_failures(&Topology::triangle(), 9);
    let plain = enumerate_scenarios(&t, 1e-3, ResidualMode::Normalize).unwrap();
    let res = enumerate_scenarios(&t, 1e-3, ResidualMode::Residual).unwrap();
    assert_eq!(res.len(), plain.len() + 1);
    assert!(res.scenarios.last().unwrap().residual);
}

#[test]
fn weibull_draws_center_on_the_median() {
    for seed in 0..3 {
        let mut d = sample_weibull(10_000, seed);
        d.sort_by(f64::total_cmp);
        let median = d[5000];
        assert!((0.0008..=0.0012).contains(&median), "{median}");
    }
}

#[test]
fn uniform_big_m_matches_auto_when_losses_are_fractions() {
    let t = Topology::triangle();
    let art = prepare_instance(&t, &CaseStudyConfig::default()).unwrap();
    let (fs, probs) = (&art.instance.fs, &art.instance.probs);
    let run = |m| {
        let cfg = EstimateConfig {
            with_ip_true: true,
            big_m: m,
            ..EstimateConfig::default()
        };
        estimate_var_min(fs, probs, 0.9, &cfg).unwrap()
    };
    let (a, b) = (run(BigM::Auto), run(BigM::Uniform(1.0)));
    assert!((a.ip_true.unwrap() - b.ip_true.unwrap()).abs() < 1e-9);
}
