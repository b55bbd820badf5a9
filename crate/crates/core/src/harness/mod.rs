//! Simulation designs, the logit baseline, prediction-error evaluation and
//! file formats.

mod eval;
pub mod io;
mod logit;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{normalize, Dataset, Normalization};

pub use eval::{evaluate, smoothed_prob, smoothed_prob_grid, support_study, EstimatorScore, EvalReport, Estimator, SupportPoint};
pub use logit::{fit_logit, LogitFit};

/// Support points of the two-point design.
pub const TWO_POINT: [[f64; 2]; 2] = [[0.7, -0.7], [-0.7, 0.7]];
/// Component covariance of the Gaussian-mixture design.
pub const MIXTURE_COV: [[f64; 2]; 2] = [[0.3, 0.15], [0.15, 0.3]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// `eta` uniform on the two points in [`TWO_POINT`].
    TwoPoint,
    /// Equal mixture of `N(TWO_POINT[k], MIXTURE_COV)`.
    GaussMixture,
    /// Intercept only: `eta, v` independent standard normal.
    UnivariateGaussian,
}

impl Design {
    pub fn dim(self) -> usize {
        match self {
            Design::UnivariateGaussian => 1,
            _ => 2,
        }
    }
}

impl std::str::FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_point" => Ok(Design::TwoPoint),
            "gauss_mixture" => Ok(Design::GaussMixture),
            "univariate_gaussian" => Ok(Design::UnivariateGaussian),
            other => Err(Error::invalid(format!("unknown design {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub design: Design,
    pub n: usize,
    pub seed: u64,
    pub eval_n: usize,
    /// Smoothing variances per coordinate of `eta`.
    pub bandwidth: Vec<f64>,
}

impl SimConfig {
    pub fn new(design: Design, n: usize, seed: u64) -> Self {
        SimConfig {
            design,
            n,
            seed,
            eval_n: 500,
            bandwidth: vec![0.04; design.dim()],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.eval_n == 0 {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        if self.bandwidth.len() != self.design.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.design.dim(),
                found: self.bandwidth.len(),
            });
        }
        Ok(())
    }
}

/// A simulated sample together with the coefficient draws that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimData {
    pub data: Dataset<f64>,
    pub eta: Vec<Vec<f64>>,
    /// Mixture component of each draw; always 0 for the univariate design.
    pub component: Vec<usize>,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Raw covariate rows `(1, x_1, ..., x_{d})` scaled to unit length.
fn draw_rows(design: Design, n: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut x = vec![1.0];
            x.extend((0..design.dim()).map(|_| normal(r)));
            let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter().map(|v| v / len).collect()
        })
        .collect()
}

fn draw_eta(design: Design, r: &mut ChaCha8Rng) -> (Vec<f64>, usize) {
    match design {
        Design::UnivariateGaussian => (vec![normal(r)], 0),
        Design::TwoPoint | Design::GaussMixture => {
            let k = usize::from(rand::Rng::random::<bool>(r));
            let mu = TWO_POINT[k];
            if design == Design::TwoPoint {
                return (mu.to_vec(), k);
            }
            let l00 = MIXTURE_COV[0][0].sqrt();
            let l10 = MIXTURE_COV[1][0] / l00;
            let l11 = (MIXTURE_COV[1][1] - l10 * l10).sqrt();
            let (e0, e1) = (normal(r), normal(r));
            (vec![mu[0] + l00 * e0, mu[1] + l10 * e0 + l11 * e1], k)
        }
    }
}

/// Draws the estimation sample. Rows are generated, scaled to unit length and
/// then divided by their intercept entry, so the last coefficient is one.
pub fn simulate(config: &SimConfig) -> Result<SimData> {
    config.validate()?;
    let mut r = rng(config.seed, 0);
    let raw = draw_rows(config.design, config.n, &mut r);
    let mut eta = Vec::with_capacity(config.n);
    let mut component = Vec::with_capacity(config.n);
    let mut y = Vec::with_capacity(config.n);
    for x in &raw {
        let (e, k) = draw_eta(config.design, &mut r);
        let d = x.len() - 1;
        let index = e.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + x[d];
        y.push(index >= 0.0);
        eta.push(e);
        component.push(k);
    }
    let data = normalize(&raw, &y, Normalization::LastUnit)?;
    Ok(SimData { data, eta, component })
}

/// Fresh covariate points `(z, v)` for evaluation, independent of the
/// estimation sample drawn with the same seed.
pub fn eval_points(config: &SimConfig) -> Result<Vec<(Vec<f64>, f64)>> {
    config.validate()?;
    let mut r = rng(config.seed, 1);
    let raw = draw_rows(config.design, config.eval_n, &mut r);
    let y = vec![true; raw.len()];
    let data = normalize(&raw, &y, Normalization::LastUnit)?;
    Ok(data.z.into_iter().zip(data.v).collect())
}

/// `P(Z . eta >= v)` under the design.
pub fn true_prob(design: Design, z: &[f64], v: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    match design {
        Design::UnivariateGaussian => std.cdf(-v),
        Design::TwoPoint => {
            TWO_POINT
                .iter()
                .filter(|mu| mu[0] + z[0] * mu[1] >= v)
                .count() as f64
                / 2.0
        }
        Design::GaussMixture => {
            let zz = [1.0, z[0]];
            let var: f64 = (0..2)
                .flat_map(|a| (0..2).map(move |b| (a, b)))
                .map(|(a, b)| zz[a] * MIXTURE_COV[a][b] * zz[b])
                .sum();
            TWO_POINT
                .iter()
                .map(|mu| std.cdf((mu[0] + z[0] * mu[1] - v) / var.sqrt()))
                .sum::<f64>()
                / 2.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let c = SimConfig::new(Design::GaussMixture, 50, 9);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
        let other = SimConfig::new(Design::GaussMixture, 50, 10);
        assert_ne!(simulate(&c).unwrap().data, simulate(&other).unwrap().data);
    }

    #[test]
    fn responses_follow_draws() {
        let s = simulate(&SimConfig::new(Design::TwoPoint, 200, 1)).unwrap();
        for i in 0..200 {
            let e = &s.eta[i];
            let idx = e[0] + s.data.z[i][0] * e[1] - s.data.v[i];
            if idx.abs() > 1e-12 {
                assert_eq!(s.data.y[i], idx > 0.0);
            }
        }
    }

    #[test]
    fn two_point_truth() {
        // Both points satisfy 0.7 - 0.7 z >= v and -0.7 + 0.7 z >= v at z = 0, v = -1.
        assert_eq!(true_prob(Design::TwoPoint, &[0.0], -1.0), 1.0);
        assert_eq!(true_prob(Design::TwoPoint, &[0.0], 0.0), 0.5);
        assert_eq!(true_prob(Design::TwoPoint, &[0.0], 1.0), 0.0);
    }

    #[test]
    fn mixture_truth_symmetric() {
        assert!((true_prob(Design::GaussMixture, &[0.0], 0.0) - 0.5).abs() < 1e-15);
        assert!((true_prob(Design::GaussMixture, &[1.0], 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_points_differ_from_sample() {
        let c = SimConfig::new(Design::TwoPoint, 5, 3);
        let s = simulate(&SimConfig { eval_n: 5, ..c.clone() }).unwrap();
        let e = eval_points(&SimConfig { eval_n: 5, ..c }).unwrap();
        assert_ne!(s.data.v, e.iter().map(|p| p.1).collect::<Vec<_>>());
    }
}
