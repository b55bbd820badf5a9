mod common;

use std::sync::OnceLock;

use common::*;
use proptest::prelude::*;
use rcbin::effects::{classify, marginal_effect, plugin_prob, prob_bounds, prob_bounds_above, EffectKind, Side};
use rcbin::harness::{simulate, Design, SimConfig};
use rcbin::model::{fit_given_theta, FitOptions, ModelFit};

fn mixture_fit() -> &'static ModelFit<f64> {
    static FIT: OnceLock<ModelFit<f64>> = OnceLock::new();
    FIT.get_or_init(|| {
        let data = simulate(&SimConfig::new(Design::GaussMixture, 120, 17)).unwrap().data;
        fit_given_theta(&data, &[], &FitOptions::default()).unwrap()
    })
}

fn query() -> impl Strategy<Value = (f64, f64)> {
    (-3.0..3.0f64, -3.0..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plugin_lies_between_the_bounds((z, v) in query()) {
        let fit = mixture_fit();
        let b = prob_bounds(fit, &[z], v).unwrap();
        let p = plugin_prob(fit, &[z], v).unwrap();
        prop_assert!(0.0 <= b.lower && b.lower <= b.upper && b.upper <= 1.0);
        prop_assert!(b.lower - 1e-12 <= p && p <= b.upper + 1e-12, "{} not in [{}, {}]", p, b.lower, b.upper);
    }

    #[test]
    fn zero_shift_contains_zero((z, v) in query()) {
        let fit = mixture_fit();
        for kind in [EffectKind::Fare, EffectKind::Time] {
            let e = marginal_effect(fit, &[z], v, 0.0, kind).unwrap();
            prop_assert!(e.lower <= 0.0 && 0.0 <= e.upper);
            let b = prob_bounds(fit, &[z], v).unwrap();
            prop_assert!((e.upper - (b.upper - b.lower)).abs() < 1e-12);
            prop_assert!((e.lower + (b.upper - b.lower)).abs() < 1e-12);
        }
    }

    #[test]
    fn effect_width_is_the_sum_of_crossed_masses((z, v) in query(), delta in 0.0..2.0f64) {
        let fit = mixture_fit();
        let e = marginal_effect(fit, &[z], v, delta, EffectKind::Fare).unwrap();
        let a = prob_bounds(fit, &[z], v).unwrap();
        let b = prob_bounds(fit, &[z], v - delta).unwrap();
        prop_assert!(((e.upper - e.lower) - (a.upper - a.lower) - (b.upper - b.lower)).abs() < 1e-12);
        prop_assert!(-1.0 <= e.lower && e.lower <= e.upper && e.upper <= 1.0);
    }

    #[test]
    fn dropping_small_cells_moves_bounds_by_at_most_their_mass((z, v) in query(), thr in 0.0..0.05f64) {
        let fit = mixture_fit();
        let dropped: f64 = fit.cells.iter().filter(|c| c.mass <= thr).map(|c| c.mass).sum();
        prop_assume!(dropped < 1.0);
        let full = prob_bounds(fit, &[z], v).unwrap();
        let kept = prob_bounds_above(fit, &[z], v, thr).unwrap();
        prop_assert!((full.lower - kept.lower).abs() <= dropped + 1e-12);
        prop_assert!((full.upper - kept.upper).abs() <= dropped + 1e-12);
    }

    #[test]
    fn classification_agrees_with_stored_points((z, v) in query()) {
        let fit = mixture_fit();
        for (j, c) in fit.cells.iter().enumerate() {
            let r = c.interior[0] + z * c.interior[1] - v;
            match classify(fit, j, &[z], v).unwrap() {
                Side::Inside => prop_assert!(r >= -1e-9),
                Side::Outside => prop_assert!(r <= 1e-9),
                Side::Crossed => {}
            }
        }
    }
}

#[test]
fn fare_bounds_move_monotonically() {
    let fit = mixture_fit();
    let (z, v) = (0.4, 0.2);
    let sweep: Vec<_> = (0..=20)
        .map(|k| marginal_effect(fit, &[z], v, k as f64 * 0.1, EffectKind::Fare).unwrap())
        .collect();
    for w in sweep.windows(2) {
        assert!(w[1].upper <= w[0].upper + 1e-12);
        assert!(w[1].lower <= w[0].lower + 1e-12);
    }
}

#[test]
fn toy_separating_query() {
    let fit = fit_given_theta(&toy_dataset(), &[], &FitOptions::default()).unwrap();
    let b = prob_bounds(&fit, &[0.40], -0.36).unwrap();
    assert!((b.lower - 0.5).abs() < 1e-9 && (b.upper - 0.5).abs() < 1e-9);
    for h in &fit.hyperplanes {
        let b = prob_bounds(&fit, h.covariates(), h.threshold()).unwrap();
        assert_eq!(b.lower, b.upper);
    }
}

#[test]
fn invalid_queries_rejected() {
    let fit = mixture_fit();
    assert!(prob_bounds(fit, &[], 0.0).is_err());
    assert!(prob_bounds(fit, &[f64::NAN], 0.0).is_err());
    assert!(marginal_effect(fit, &[0.0], 0.0, -1.0, EffectKind::Fare).is_err());
}
