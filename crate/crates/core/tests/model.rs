mod common;

use common::*;
use proptest::prelude::*;
use rcbin::arrangement::{build_adjacency, enumerate, locally_maximal, EnumerateOptions};
use rcbin::harness::{simulate, Design, SimConfig};
use rcbin::mixsolver::{kkt_residual, solve, MixtureSolution};
use rcbin::model::{fit_given_theta, profile_fit, Dataset, FitOptions, ProfileBudget, ThetaBox};
use rcbin::univariate::{fit_univariate, UnivariateFit};

fn flipped(data: &Dataset<f64>) -> Dataset<f64> {
    Dataset::new(
        data.y.iter().map(|&b| !b).collect(),
        data.z.clone(),
        data.v.iter().map(|&v| -v).collect(),
        data.w.clone(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn intercept_only_matches_univariate(seed in any::<u64>(), n in 2usize..150) {
        let (v, y) = current_status(seed, n);
        prop_assume!(v.iter().any(|&x| x != v[0]));
        let data = Dataset::without_w(y.clone(), vec![vec![]; n], v.iter().map(|&x| -x).collect()).unwrap();
        let fit = fit_given_theta(&data, &[], &FitOptions::default()).unwrap();
        let uni: UnivariateFit<f64> = fit_univariate(&v, &y).unwrap();
        prop_assert!((fit.loglik - uni.solution.loglik).abs() <= 1e-8);
    }

    #[test]
    fn pruning_never_changes_the_optimum(seed in 0u64..1000, n in 5usize..60) {
        let sim = simulate(&SimConfig::new(Design::GaussMixture, n, seed)).unwrap();
        let mut arr = enumerate(&sim.data.hyperplanes(&[]).unwrap(), &EnumerateOptions::default()).unwrap();
        let adj = build_adjacency(&mut arr);
        let max = locally_maximal(&arr, &adj);
        let full: MixtureSolution<f64> = solve(&adj.to_binary_matrix_full()).unwrap();
        let pruned: MixtureSolution<f64> = solve(&adj.to_binary_matrix(&max)).unwrap();
        prop_assert!((full.loglik - pruned.loglik).abs() <= 1e-8, "{} vs {}", full.loglik, pruned.loglik);
    }

    #[test]
    fn label_symmetry(seed in 0u64..1000, n in 5usize..80) {
        let data = simulate(&SimConfig::new(Design::TwoPoint, n, seed)).unwrap().data;
        let a = fit_given_theta(&data, &[], &FitOptions::default()).unwrap();
        let b = fit_given_theta(&flipped(&data), &[], &FitOptions::default()).unwrap();
        prop_assert_eq!(a.n_cells, b.n_cells);
        prop_assert!((a.loglik - b.loglik).abs() <= 1e-8);
    }
}

#[test]
fn fits_are_certified() {
    for seed in 0..4 {
        let data = simulate(&SimConfig::new(Design::GaussMixture, 120, seed)).unwrap().data;
        let fit = fit_given_theta(&data, &[], &FitOptions::default()).unwrap();
        assert!(fit.gap <= 1e-6);
        assert!(fit.loglik <= 0.0);
        let total: f64 = fit.cells.iter().map(|c| c.mass).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(fit.cells.iter().all(|c| c.mass > 0.0 && c.count > 0));
    }
}

#[test]
fn the_solution_certificate_is_recomputable() {
    let data = simulate(&SimConfig::new(Design::TwoPoint, 80, 3)).unwrap().data;
    let mut arr = enumerate(&data.hyperplanes(&[]).unwrap(), &EnumerateOptions::default()).unwrap();
    let adj = build_adjacency(&mut arr);
    let a = adj.to_binary_matrix(&locally_maximal(&arr, &adj));
    let s: MixtureSolution<f64> = solve(&a).unwrap();
    assert!(kkt_residual(&a, &s.p, &s.q).unwrap() <= 1e-6);
}

#[test]
fn appending_observations_never_raises_the_likelihood() {
    let data = simulate(&SimConfig::new(Design::GaussMixture, 40, 8)).unwrap().data;
    let mut prev = 0.0;
    for n in 3..=40 {
        let sub = data.subset(&(0..n).collect::<Vec<_>>()).unwrap();
        let fit = fit_given_theta(&sub, &[], &FitOptions::default()).unwrap();
        assert!(fit.loglik <= prev + 1e-9, "n = {n}: {} after {prev}", fit.loglik);
        prev = fit.loglik;
    }
}

#[test]
fn index_coefficient_is_recovered() {
    let budget = ProfileBudget { grid: 11, refine: 60 };
    let domain = ThetaBox { lower: vec![-1.0], upper: vec![2.0] };
    for seed in 1..=3 {
        let data = index_sample(seed, 500, 0.5);
        let fit = profile_fit(&data, &domain, &budget, &FitOptions::default()).unwrap();
        assert!((fit.theta[0] - 0.5).abs() <= 0.25, "seed {seed}: theta = {}", fit.theta[0]);
        assert!(fit.gap <= 1e-6);
        let best = fit.profile.iter().map(|p| p.loglik).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, fit.loglik);
    }
}

#[test]
fn profile_is_reproducible() {
    let data = index_sample(9, 150, 0.5);
    let domain = ThetaBox { lower: vec![-1.0], upper: vec![2.0] };
    let budget = ProfileBudget { grid: 7, refine: 30 };
    let a = profile_fit(&data, &domain, &budget, &FitOptions::default()).unwrap();
    let b = profile_fit(&data, &domain, &budget, &FitOptions::default()).unwrap();
    assert_eq!(a.theta, b.theta);
    assert_eq!(a.profile, b.profile);
    assert_eq!(a.cells, b.cells);
}

#[test]
fn three_dimensional_fit_runs_perturbed() {
    let mut r = rng(4);
    let n = 25;
    let z: Vec<Vec<f64>> = (0..n).map(|_| vec![normal(&mut r), normal(&mut r)]).collect();
    let v: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let y: Vec<bool> = z.iter().zip(&v).map(|(z, v)| 0.3 + 0.8 * z[0] - 0.5 * z[1] + 0.4 * normal(&mut r) >= *v).collect();
    let fit = fit_given_theta(&Dataset::without_w(y, z, v).unwrap(), &[], &FitOptions::default()).unwrap();
    assert_eq!(fit.dim(), 3);
    assert!(fit.gap <= 1e-6);
    assert!(fit.n_maximal <= fit.n_cells);
}
