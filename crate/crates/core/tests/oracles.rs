//! Cross-module oracles: every route to the arrival statistics must agree
//! with the closed form, and the shared invariants must hold on random
//! inputs.

use eeqt_core::analytic::{cumulative_and_efficiency, DetectorSpec, GaussianPacket};
use eeqt_core::gridsim::{evolve_with_sink, Grid};
use eeqt_core::montecarlo::{ks_critical_two_sample, ks_two_sample, sample_events_thinning};
use eeqt_core::operator::{
    detection_probability, discretized_line_model, master_evolve, rate_function, rate_series, CoupledState, LineGrid,
    QuantumModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gridsim_efficiency_matches_closed_form() {
    let packet = GaussianPacket::reference_setup();
    let det = DetectorSpec::at_origin(1.0).unwrap();
    let dist = cumulative_and_efficiency(&packet, &det, 25.0, 1e-8).unwrap();
    let mut previous = f64::INFINITY;
    for n in [2048, 4096] {
        let grid = Grid::centered(&packet, &det, 256.0, n, 2e-3 * (2048.0 / n as f64).powi(2)).unwrap();
        let run = evolve_with_sink(&grid, &packet, &det, 25.0).unwrap();
        assert!(run.valid);
        let relative = (run.detected() - dist.cdf(25.0)).abs() / dist.cdf(25.0);
        assert!(relative < previous, "no improvement under refinement at n = {n}");
        previous = relative;
    }
    assert!(previous <= 1e-2, "relative efficiency error {previous}");
}

#[test]
fn line_model_efficiency_matches_closed_form() {
    let packet = GaussianPacket::reference_setup();
    let det = DetectorSpec::at_origin(1.0).unwrap();
    let dist = cumulative_and_efficiency(&packet, &det, 20.0, 1e-8).unwrap();
    let grid = LineGrid::covering(&packet, &det, 20.0, 0.05).unwrap();
    let model = discretized_line_model(&grid, &packet, &det).unwrap();
    let p = detection_probability(&model, 20.0).unwrap();
    assert!(
        (p - dist.cdf(20.0)).abs() / dist.cdf(20.0) <= 1e-2,
        "{p} vs {}",
        dist.cdf(20.0)
    );
}

#[test]
fn master_equation_matches_propagator_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for dim in [3, 4] {
        let model = QuantumModel::random(dim, 1.5, &mut rng).unwrap();
        let state = master_evolve(&model, &CoupledState::initial(model.psi0()), 2.0, 1e-11).unwrap();
        let p = detection_probability(&model, 2.0).unwrap();
        assert!((p - (1.0 - state.trace1())).abs() <= 1e-8);
        assert!((p - state.trace0()).abs() <= 1e-7);
        assert!(state.min_eigenvalue() >= -1e-9);
    }
}

#[test]
fn thinning_ensembles_agree_across_seeds() {
    let model = QuantumModel::random(4, 1.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let a = sample_events_thinning(&model, 20_000, 1, 25.0)
        .unwrap()
        .detected_times();
    let b = sample_events_thinning(&model, 20_000, 2, 25.0)
        .unwrap()
        .detected_times();
    assert!(ks_two_sample(&a, &b) < ks_critical_two_sample(a.len(), b.len(), 0.01));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_form_cdf_is_monotone_and_bounded(
        x0 in -10.0f64..0.0,
        v in 0.0f64..4.0,
        alpha in 0.05f64..10.0,
    ) {
        let packet = GaussianPacket::new(x0, v).unwrap();
        let dist = cumulative_and_efficiency(&packet, &DetectorSpec::at_origin(alpha).unwrap(), 100.0, 1e-6).unwrap();
        prop_assert!(dist.cumulative.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(dist.density.iter().all(|&p| p >= 0.0));
        prop_assert!(dist.efficiency <= 1.0 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_models_respect_probability_identities(seed in any::<u64>(), dim in 2usize..6, kappa in 0.0f64..4.0) {
        let model = QuantumModel::random(dim, kappa, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let times: Vec<f64> = (0..=16).map(|i| 0.25 * i as f64).collect();
        let series = rate_series(&model, &times).unwrap();
        prop_assert!(series.survival.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(series.survival.iter().all(|&s| (0.0..=1.0 + 1e-12).contains(&s)));
        for ((&t, &s), &p) in times.iter().zip(&series.survival).zip(&series.density) {
            prop_assert!(p >= 0.0);
            if s > 1e-9 {
                let lambda = rate_function(&model, t).unwrap();
                prop_assert!((lambda * s - p).abs() <= 1e-10);
            }
        }
    }
}
