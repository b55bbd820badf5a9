mod common;

use common::*;
use proptest::prelude::*;
use rcbin::arrangement::{build_adjacency, enumerate, locally_maximal, EnumerateOptions};
use rcbin::mixsolver::{solve, MixtureSolution};
use rcbin::univariate::{fit_univariate, fit_univariate_all, interval_counts, to_hyperplanes, UnivariateFit};

fn arrangement_loglik(v: &[f64], y: &[bool]) -> f64 {
    let mut arr = enumerate(&to_hyperplanes(v, y).unwrap(), &EnumerateOptions::default()).unwrap();
    let adj = build_adjacency(&mut arr);
    let max = locally_maximal(&arr, &adj);
    let s: MixtureSolution<f64> = solve(&adj.to_binary_matrix(&max)).unwrap();
    s.loglik
}

/// Values on a coarse grid so that ties are common.
fn tied_sample() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..40).prop_flat_map(|n| (prop::collection::vec(-5i32..5, n), prop::collection::vec(any::<bool>(), n)))
        .prop_map(|(v, y)| (v.into_iter().map(|x| x as f64 * 0.5).collect(), y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn counts_match_containment(seed in any::<u64>(), n in 1usize..60) {
        let (v, y) = current_status(seed, n);
        let p = interval_counts(&v, &y).unwrap();
        prop_assert_eq!(p.len(), n + 1);
        for j in 0..p.len() {
            let direct = (0..n).filter(|&i| p.contained(j, v[i], y[i])).count();
            prop_assert_eq!(p.counts[j], direct);
            prop_assert!(p.counts[j] <= n);
        }
        for i in 0..n {
            let row = (0..p.len()).filter(|&j| p.contained(j, v[i], y[i])).count();
            let want = if y[i] { v.iter().filter(|&&x| x <= v[i]).count() } else { v.iter().filter(|&&x| x >= v[i]).count() };
            prop_assert_eq!(row, want);
        }
    }

    #[test]
    fn maximal_intervals_are_local_maxima(seed in any::<u64>(), n in 1usize..60) {
        let (v, y) = current_status(seed, n);
        let p = interval_counts(&v, &y).unwrap();
        prop_assert!(!p.maximal.is_empty());
        for &j in &p.maximal {
            if j > 0 { prop_assert!(p.counts[j - 1] <= p.counts[j]); }
            if j + 1 < p.len() { prop_assert!(p.counts[j + 1] < p.counts[j]); }
        }
        let best = *p.counts.iter().max().unwrap();
        prop_assert!(p.maximal.iter().any(|&j| p.counts[j] == best));
    }

    #[test]
    fn pruning_is_lossless(seed in any::<u64>(), n in 1usize..120) {
        let (v, y) = current_status(seed, n);
        let a: UnivariateFit<f64> = fit_univariate(&v, &y).unwrap();
        let b: UnivariateFit<f64> = fit_univariate_all(&v, &y).unwrap();
        prop_assert!((a.solution.loglik - b.solution.loglik).abs() <= 1e-8);
    }

    #[test]
    fn pruning_is_lossless_with_ties((v, y) in tied_sample()) {
        let a: UnivariateFit<f64> = fit_univariate(&v, &y).unwrap();
        let b: UnivariateFit<f64> = fit_univariate_all(&v, &y).unwrap();
        prop_assert!((a.solution.loglik - b.solution.loglik).abs() <= 1e-8);
        prop_assert!(a.solution.loglik <= 1e-12);
    }

    #[test]
    fn agrees_with_arrangement_path(seed in any::<u64>(), n in 1usize..80) {
        let (v, y) = current_status(seed, n);
        let a: UnivariateFit<f64> = fit_univariate(&v, &y).unwrap();
        prop_assert!((a.solution.loglik - arrangement_loglik(&v, &y)).abs() <= 1e-8);
    }
}

#[test]
fn arrangement_path_at_n_200() {
    for seed in 0..5 {
        let (v, y) = current_status(seed, 200);
        let a: UnivariateFit<f64> = fit_univariate(&v, &y).unwrap();
        assert!((a.solution.loglik - arrangement_loglik(&v, &y)).abs() <= 1e-8, "seed {seed}");
    }
}

#[test]
fn one_sided_samples_put_mass_at_the_end() {
    let v = [0.3, -1.0, 2.0];
    let f: UnivariateFit<f64> = fit_univariate(&v, &[true; 3]).unwrap();
    assert_eq!(f.support.len(), 1);
    assert_eq!((f.support[0].lower, f.support[0].upper), (None, Some(-1.0)));
    assert!(f.solution.loglik.abs() < 1e-12);
    let f: UnivariateFit<f64> = fit_univariate(&v, &[false; 3]).unwrap();
    assert_eq!((f.support[0].lower, f.support[0].upper), (Some(2.0), None));
}

#[test]
fn support_masses_sum_to_one() {
    let (v, y) = current_status(77, 500);
    let f: UnivariateFit<f64> = fit_univariate(&v, &y).unwrap();
    let total: f64 = f.support.iter().map(|s| s.mass).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(f.support.windows(2).all(|w| w[0].location() <= w[1].location()));
    assert!(f.support.len() < f.partition.maximal.len());
}
