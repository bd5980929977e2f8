//! Cross-module properties: packet -> counters -> spectrum -> time law ->
//! events, and the studies built on them.

use proptest::prelude::*;
use qarrival::arrival::{Composition, CounterArray, CounterSystem, DeltaCounter};
use qarrival::config::shipped;
use qarrival::dynamics::DimensionlessPacket;
use qarrival::events::{intensity_from_survival, sample_first_events, validate_samples, Sampler};
use qarrival::inversion::{efficiency_quadrature, EfficiencyQuadrature};
use qarrival::studies::{counter_law, efficiency, optimize_alpha, ALPHA_TOL};
use qarrival::{runs, validation};

fn packet(xi0: f64, v: f64) -> DimensionlessPacket {
    DimensionlessPacket::new(xi0, v).unwrap()
}

#[test]
fn optimum_is_a_true_interior_maximum() {
    let p = packet(0.0, 0.0);
    let (a, pmax) = optimize_alpha(&p, (0.05, 4.0)).unwrap();
    for da in [-10.0 * ALPHA_TOL, 10.0 * ALPHA_TOL] {
        assert!(efficiency(&p, a + da).unwrap() < pmax);
    }
}

#[test]
fn doubling_the_bracket_keeps_the_optimum() {
    let p = packet(-4.0, 4.0);
    let (a1, p1) = optimize_alpha(&p, (2.0, 36.0)).unwrap();
    let (a2, p2) = optimize_alpha(&p, (1.0, 72.0)).unwrap();
    assert!((a1 - a2).abs() < 2.0 * ALPHA_TOL, "{a1} {a2}");
    assert!((p1 - p2).abs() < 1e-9);
    assert!((a1 / 8.0 - 1.0).abs() < 0.15);
    assert!((p1 - 0.5).abs() < 0.02);
}

#[test]
fn coincident_incoherent_counters_add_their_strengths() {
    // two incoherent counters at one site detect like one counter of
    // strength alpha1 + alpha2
    let p = packet(-4.0, 4.0);
    let pair = CounterArray::new(
        vec![DeltaCounter::new(0.0, 0.7).unwrap(), DeltaCounter::new(0.0, 1.8).unwrap()],
        Composition::Incoherent,
    )
    .unwrap();
    let opts = EfficiencyQuadrature::default();
    let joint = efficiency_quadrature(&CounterSystem::new(p, pair), opts).unwrap();
    assert!((joint - efficiency(&p, 2.5).unwrap()).abs() < 1e-9);
}

#[test]
fn shipped_arrival_law_feeds_a_passing_sampler() {
    let cfg = shipped("fig2_alpha100.toml").unwrap();
    let law = counter_law(&cfg.packet().unwrap(), &cfg.counter_array().unwrap(), &cfg.time_grids()).unwrap();
    let trace = intensity_from_survival(&law.distribution).unwrap();
    assert!(trace.survival_identity_error() < 1e-8);
    for sampler in [Sampler::InverseCdf, Sampler::Thinning] {
        let outcomes = sample_first_events(&trace, 20_000, 11, sampler);
        assert!(validate_samples(&trace, &outcomes, 0.01).unwrap().passed(), "{sampler:?}");
    }
}

#[test]
fn arrival_runs_are_bit_reproducible() {
    let cfg = shipped("composite.toml").unwrap();
    let a = runs::arrival(&cfg).unwrap();
    let b = runs::arrival(&cfg).unwrap();
    assert_eq!(a, b);
    // the composite array detects more than either counter alone
    let single = efficiency(&cfg.packet().unwrap(), 1.0).unwrap();
    assert!(a.p_inf_quadrature > single);
    assert!((a.p_inf_parseval - a.p_integrated).abs() < 1e-6);
}

#[test]
fn unknown_criterion_is_rejected() {
    assert!(validation::run_criterion(0).is_err());
    assert!(validation::run_criterion(10).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn efficiency_is_a_probability_and_even_in_velocity(v in 0.0f64..6.0, alpha in 0.05f64..20.0) {
        let forward = efficiency(&packet(0.0, v), alpha).unwrap();
        let backward = efficiency(&packet(0.0, -v), alpha).unwrap();
        prop_assert!((0.0..=1.0 + 1e-6).contains(&forward));
        prop_assert!((forward - backward).abs() < 1e-8, "{} vs {}", forward, backward);
    }
}
