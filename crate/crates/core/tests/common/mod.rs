#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rcbin::arrangement::Hyperplane;
use rcbin::model::Dataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

/// Gaussian covariates and thresholds: general position with probability one.
pub fn random_hyperplanes(seed: u64, n: usize, d: usize) -> Vec<Hyperplane<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d - 1).map(|_| normal(&mut r)).collect();
            let v = normal(&mut r);
            Hyperplane::new(&z, v, r.random::<bool>()).unwrap()
        })
        .collect()
}

fn line(z: f64, v: f64) -> Hyperplane<f64> {
    Hyperplane::new(&[z], v, true).unwrap()
}

/// Hand-built degenerate line sets in the plane.
pub fn degenerate_cases() -> Vec<(&'static str, Vec<Hyperplane<f64>>)> {
    vec![
        ("duplicate line", vec![line(0.5, 0.1), line(-1.0, 0.4), line(0.5, 0.1), line(2.0, -0.3)]),
        ("parallel pair", vec![line(1.0, 0.0), line(1.0, 1.0), line(-0.5, 0.2), line(0.3, -0.7)]),
        ("triple-concurrent vertex", vec![line(0.0, 0.0), line(1.0, 0.0), line(-2.0, 0.0), line(0.7, 0.9)]),
        ("all parallel", vec![line(1.5, 0.0), line(1.5, 1.0), line(1.5, -2.0), line(1.5, 0.5)]),
        (
            "concurrent pencil with a duplicate",
            vec![line(0.5, 0.5), line(-1.0, -1.0), line(2.0, 2.0), line(-1.0, -1.0), line(0.0, -0.3)],
        ),
    ]
}

/// The five-observation example; its coordinates are listed for the lower
/// halfspace, so `v` enters negated.
pub const TOY: [(f64, f64, bool); 5] =
    [(0.41, 1.22, true), (0.40, 0.36, false), (0.17, 0.24, true), (-0.79, 0.99, false), (-0.94, 0.55, false)];

pub fn toy_hyperplanes() -> Vec<Hyperplane<f64>> {
    TOY.iter().map(|&(z, v, y)| Hyperplane::new(&[z], -v, y).unwrap()).collect()
}

pub fn toy_dataset() -> Dataset<f64> {
    Dataset::without_w(
        TOY.iter().map(|r| r.2).collect(),
        TOY.iter().map(|r| vec![r.0]).collect(),
        TOY.iter().map(|r| -r.1).collect(),
    )
    .unwrap()
}

/// Current status sample: `y = 1{eta <= v}` with independent standard normals.
pub fn current_status(seed: u64, n: usize) -> (Vec<f64>, Vec<bool>) {
    let mut r = rng(seed);
    let mut v = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let eta = normal(&mut r);
        let vi = normal(&mut r);
        v.push(vi);
        y.push(eta <= vi);
    }
    (v, y)
}

/// Scalar index model `y = 1{eta + theta * w >= v}` with `eta` a two-point law.
pub fn index_sample(seed: u64, n: usize, theta: f64) -> Dataset<f64> {
    let mut r = rng(seed);
    let (mut y, mut v, mut w) = (vec![], vec![], vec![]);
    for _ in 0..n {
        let eta = if r.random::<bool>() { 0.8 } else { -0.8 };
        let vi = normal(&mut r);
        let wi = normal(&mut r);
        y.push(eta + theta * wi >= vi);
        v.push(vi);
        w.push(vec![wi]);
    }
    Dataset::new(y, vec![vec![]; n], v, w).unwrap()
}
