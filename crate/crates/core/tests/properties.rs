mod common;

use agrisk::altmin::{alternate_minimize, DEFAULT_EPS};
use agrisk::distribution::DiscreteDistribution;
use agrisk::model::{w_prime_vertices, BilinearProgram, FeasibleSet};
use agrisk::nette::{enumerate_scenarios, sample_link_failures, ResidualMode, Topology};
use agrisk::programs::expectation_via_dual;
use agrisk::threshold::{alpha_star, DEFAULT_B};
use proptest::prelude::*;

fn distribution() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((-50i32..50, 1u32..100), 1..16).prop_map(|atoms| {
        let total: u32 = atoms.iter().map(|a| a.1).sum();
        let values = atoms.iter().map(|a| a.0 as f64 / 4.0).collect();
        let probs = atoms.iter().map(|a| a.1 as f64 / total as f64).collect();
        (values, probs)
    })
}

fn levels() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1.0f64, 0.0..1.0f64).prop_filter_map("distinct levels", |(a, b)| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        (hi - lo > 1e-6).then_some((lo, hi))
    })
}

proptest! {
    #[test]
    fn slice_matches_lp((values, probs) in distribution(), (a, g) in levels()) {
        let d = DiscreteDistribution::new(values.clone(), probs.clone()).unwrap();
        let lp = expectation_via_dual(&values, &probs, a, g).unwrap();
        prop_assert!((lp - d.expectation_slice(a, g).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn slice_is_monotone_in_both_levels((values, probs) in distribution(), (a, g) in levels(), t in 0.0..1.0f64) {
        let d = DiscreteDistribution::new(values, probs).unwrap();
        let e = d.expectation_slice(a, g).unwrap();
        let a2 = a + t * (g - a) * 0.999;
        prop_assert!(d.expectation_slice(a2, g).unwrap() >= e - 1e-9);
        let g2 = g + t * (1.0 - g);
        prop_assert!(d.expectation_slice(a, g2).unwrap() >= e - 1e-9);
    }

    #[test]
    fn slice_lies_between_quantiles((values, probs) in distribution(), (a, g) in levels()) {
        let d = DiscreteDistribution::new(values.clone(), probs).unwrap();
        let e = d.expectation_slice(a, g).unwrap();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(e >= lo - 1e-9);
        prop_assert!(e <= d.quantile(g).unwrap() + 1e-9);
        prop_assert!(e <= d.cvar(a).unwrap() + 1e-9);
    }

    #[test]
    fn slice_is_translation_and_scale_equivariant(
        (values, probs) in distribution(), (a, g) in levels(), shift in -5.0..5.0f64, scale in 0.1..3.0f64,
    ) {
        let d = DiscreteDistribution::new(values.clone(), probs.clone()).unwrap();
        let moved: Vec<f64> = values.iter().map(|v| scale * v + shift).collect();
        let m = DiscreteDistribution::new(moved, probs).unwrap();
        let lhs = m.expectation_slice(a, g).unwrap();
        let rhs = scale * d.expectation_slice(a, g).unwrap() + shift;
        prop_assert!((lhs - rhs).abs() < 1e-8 * (1.0 + rhs.abs()));
    }

    #[test]
    fn iqf_is_convex((values, probs) in distribution(), (a, g) in levels(), t in 0.0..1.0f64) {
        let d = DiscreteDistribution::new(values, probs).unwrap();
        let mid = t * a + (1.0 - t) * g;
        let chord = t * d.iqf(a).unwrap() + (1.0 - t) * d.iqf(g).unwrap();
        prop_assert!(d.iqf(mid).unwrap() <= chord + 1e-9);
    }

    #[test]
    fn csv_round_trip((values, probs) in distribution()) {
        let d = DiscreteDistribution::new(values, probs).unwrap();
        let back = DiscreteDistribution::from_csv_reader(d.to_csv_string().unwrap().as_bytes()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn w_prime_vertices_are_feasible((_, probs) in distribution(), mass in 0.0..1.0f64) {
        let vs = w_prime_vertices(&probs, mass);
        prop_assert!(!vs.is_empty());
        for w in vs {
            let s: f64 = w.iter().zip(&probs).map(|(x, p)| x * p).sum();
            prop_assert!((s - mass).abs() < 1e-9);
            prop_assert!(w.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
            prop_assert!(w.iter().filter(|&&x| x > 1e-12 && x < 1.0 - 1e-12).count() <= 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn above_alpha_star_the_slice_is_var((values, probs) in distribution(), g in 0.05..0.99f64, t in 0.0..1.0f64) {
        let cert = alpha_star(&probs, g, DEFAULT_B).unwrap();
        prop_assert!(cert.alpha_star < g);
        prop_assert!(cert.steps.windows(2).all(|w| w[0] < w[1]));
        let d = DiscreteDistribution::new(values, probs).unwrap();
        let a = cert.alpha_star + t * (g - cert.alpha_star);
        prop_assume!(g - a > 1e-9);
        prop_assert!((d.expectation_slice(a, g).unwrap() - d.quantile(g).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn alternating_minimization_never_increases(seed in any::<u64>(), k in 1usize..4, n in 2usize..6, g in 0.5..0.95f64) {
        let mut rng = common::rng(seed);
        let fs = common::random_feasible_set(&mut rng, k, n);
        let probs = common::random_probs(&mut rng, n);
        let bp = BilinearProgram::new(&fs, &probs, g, g + 0.02).unwrap();
        let am = alternate_minimize(&bp, DEFAULT_EPS).unwrap();
        prop_assert!(am.trace.windows(2).all(|w| w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs())));
        prop_assert!(fs.max_violation(&am.x, &am.t) < 1e-7);
    }

    #[test]
    fn feasible_set_json_round_trip(seed in any::<u64>(), k in 0usize..4, n in 1usize..6) {
        let mut rng = common::rng(seed);
        let fs = common::random_feasible_set(&mut rng, k, n);
        let probs = common::random_probs(&mut rng, n);
        let (back, p) = FeasibleSet::from_json_str(&fs.to_json_string(Some(&probs)).unwrap()).unwrap();
        prop_assert_eq!(p.unwrap(), probs);
        prop_assert_eq!(back.a(), fs.a());
        prop_assert_eq!(back.b(), fs.b());
        prop_assert_eq!(back.c(), fs.c());
    }

    #[test]
    fn scenario_masses(seed in any::<u64>(), threshold in 1e-6..1e-2f64) {
        let t = sample_link_failures(&Topology::b4_like(seed), seed);
        let raw = enumerate_scenarios(&t, threshold, ResidualMode::Normalize).unwrap();
        prop_assert!(raw.covered_mass <= 1.0 + 1e-12);
        prop_assert!((raw.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(raw.scenarios[0].failed.is_empty());
        let res = enumerate_scenarios(&t, threshold, ResidualMode::Residual).unwrap();
        prop_assert!((res.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
