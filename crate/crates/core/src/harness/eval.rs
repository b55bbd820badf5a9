use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{eval_points, fit_logit, simulate, true_prob, SimConfig};
use crate::effects::prob_bounds;
use crate::error::{Error, Result};
use crate::mixsolver::{smooth, GridSpec};
use crate::model::{fit_given_theta, FitOptions, ModelFit};
use crate::univariate::fit_univariate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Midpoint of the probability bounds.
    Npmle,
    /// Fitted masses convolved with a Gaussian kernel.
    NpmleSmoothed,
    Logit,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Npmle => "npmle",
            Estimator::NpmleSmoothed => "npmle_smoothed",
            Estimator::Logit => "logit",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "npmle" => Ok(Estimator::Npmle),
            "npmle_smoothed" => Ok(Estimator::NpmleSmoothed),
            "logit" => Ok(Estimator::Logit),
            other => Err(Error::invalid(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorScore {
    pub estimator: Estimator,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rep: usize,
    pub seed: u64,
    pub scores: Vec<EstimatorScore>,
}

impl EvalReport {
    pub fn score(&self, e: Estimator) -> Option<&EstimatorScore> {
        self.scores.iter().find(|s| s.estimator == e)
    }
}

/// `P(Z0 . eta >= v0)` under the fitted masses convolved with
/// `N(0, diag(bandwidth))`, in closed form.
pub fn smoothed_prob(fit: &ModelFit<f64>, bandwidth: &[f64], z0: &[f64], v0: f64) -> Result<f64> {
    if bandwidth.len() != fit.dim() || z0.len() + 1 != fit.dim() {
        return Err(Error::DimensionMismatch {
            expected: fit.dim(),
            found: bandwidth.len(),
        });
    }
    if bandwidth.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::invalid("bandwidth entries must be positive"));
    }
    let zz: Vec<f64> = std::iter::once(1.0).chain(z0.iter().copied()).collect();
    let sd = zz.iter().zip(bandwidth).map(|(z, b)| z * z * b).sum::<f64>().sqrt();
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let total: f64 = fit.cells.iter().map(|c| c.mass).sum();
    let hit: f64 = fit
        .cells
        .iter()
        .map(|c| {
            let m: f64 = zz.iter().zip(&c.interior).map(|(a, b)| a * b).sum();
            c.mass * std.cdf((m - v0) / sd)
        })
        .sum();
    Ok(hit / total)
}

/// The same probability as a Riemann sum of the smoothed density over the
/// grid nodes in the query halfspace.
pub fn smoothed_prob_grid(
    fit: &ModelFit<f64>,
    bandwidth: &[f64],
    grid: &GridSpec<f64>,
    z0: &[f64],
    v0: f64,
) -> Result<f64> {
    let support: Vec<Vec<f64>> = fit.cells.iter().map(|c| c.interior.clone()).collect();
    let masses: Vec<f64> = fit.cells.iter().map(|c| c.mass).collect();
    let dens = smooth(&support, &masses, bandwidth, grid)?;
    let zz: Vec<f64> = std::iter::once(1.0).chain(z0.iter().copied()).collect();
    let vol: f64 = dens.axes.iter().map(|ax| if ax.len() < 2 { 1.0 } else { ax[1] - ax[0] }).product();
    let sum: f64 = (0..dens.values.len())
        .filter(|&k| zz.iter().zip(dens.node(k)).map(|(a, b)| a * b).sum::<f64>() >= v0)
        .map(|k| dens.values[k])
        .sum();
    Ok(sum * vol)
}

fn score(estimator: Estimator, pred: &[f64], truth: &[f64]) -> EstimatorScore {
    let n = truth.len() as f64;
    let mae = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
    let rmse = (pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n).sqrt();
    EstimatorScore { estimator, mae, rmse }
}

fn replicate(config: &SimConfig, estimators: &[Estimator], rep: usize) -> Result<EvalReport> {
    let seed = config.seed.wrapping_add(rep as u64);
    let cfg = SimConfig { seed, ..config.clone() };
    let sim = simulate(&cfg)?;
    let points = eval_points(&cfg)?;
    let truth: Vec<f64> = points.iter().map(|(z, v)| true_prob(cfg.design, z, *v)).collect();

    let needs_npmle = estimators.iter().any(|e| matches!(e, Estimator::Npmle | Estimator::NpmleSmoothed));
    let fit = if needs_npmle {
        let opts = FitOptions {
            enumerate: crate::arrangement::EnumerateOptions { seed, parallel: false },
            ..FitOptions::default()
        };
        Some(fit_given_theta(&sim.data, &[], &opts)?)
    } else {
        None
    };

    let mut scores = Vec::with_capacity(estimators.len());
    for &e in estimators {
        let pred: Vec<f64> = match e {
            Estimator::Npmle => {
                let fit = fit.as_ref().expect("fitted above");
                points
                    .iter()
                    .map(|(z, v)| prob_bounds(fit, z, *v).map(|b| 0.5 * (b.lower + b.upper)))
                    .collect::<Result<_>>()?
            }
            Estimator::NpmleSmoothed => {
                let fit = fit.as_ref().expect("fitted above");
                points
                    .iter()
                    .map(|(z, v)| smoothed_prob(fit, &cfg.bandwidth, z, *v))
                    .collect::<Result<_>>()?
            }
            Estimator::Logit => {
                let lf = fit_logit(&sim.data)?;
                points.iter().map(|(z, v)| lf.predict(z, *v, &[])).collect()
            }
        };
        scores.push(score(e, &pred, &truth));
    }
    Ok(EvalReport { rep, seed, scores })
}

/// Runs `reps` replications with seeds `config.seed + rep`, in parallel,
/// reporting in replication order.
pub fn evaluate(config: &SimConfig, estimators: &[Estimator], reps: usize) -> Result<Vec<EvalReport>> {
    if estimators.is_empty() {
        return Err(Error::invalid("at least one estimator is required"));
    }
    (0..reps).into_par_iter().map(|r| replicate(config, estimators, r)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub n: usize,
    /// Mean number of locally maximal intervals.
    pub maximal: f64,
    /// Mean number of intervals with positive mass.
    pub support: f64,
}

impl SupportPoint {
    pub fn ratio(&self) -> f64 {
        self.support / self.maximal
    }
}

/// Support size against local-maxima count for current status data with
/// independent standard normal `v` and `eta`, averaged over `reps` samples.
pub fn support_study(ns: &[usize], reps: usize, seed: u64) -> Result<Vec<SupportPoint>> {
    ns.iter()
        .map(|&n| {
            let runs: Vec<(usize, usize)> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
                    rng.set_stream(n as u64);
                    let mut v = Vec::with_capacity(n);
                    let mut y = Vec::with_capacity(n);
                    for _ in 0..n {
                        let eta: f64 = StandardNormal.sample(&mut rng);
                        let vi: f64 = StandardNormal.sample(&mut rng);
                        v.push(vi);
                        y.push(eta <= vi);
                    }
                    let fit = fit_univariate(&v, &y)?;
                    Ok((fit.partition.maximal.len(), fit.support.len()))
                })
                .collect::<Result<_>>()?;
            let k = reps.max(1) as f64;
            Ok(SupportPoint {
                n,
                maximal: runs.iter().map(|r| r.0 as f64).sum::<f64>() / k,
                support: runs.iter().map(|r| r.1 as f64).sum::<f64>() / k,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Design;

    #[test]
    fn logit_only_report() {
        let c = SimConfig { eval_n: 50, ..SimConfig::new(Design::TwoPoint, 100, 4) };
        let r = evaluate(&c, &[Estimator::Logit], 2).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|x| x.scores.len() == 1));
        assert_eq!(r[1].seed, 5);
    }

    #[test]
    fn grid_matches_closed_form() {
        let c = SimConfig::new(Design::GaussMixture, 100, 2);
        let sim = simulate(&c).unwrap();
        let fit = fit_given_theta(&sim.data, &[], &FitOptions::default()).unwrap();
        let lo: Vec<f64> = (0..2).map(|k| fit.cells.iter().map(|c| c.interior[k]).fold(f64::INFINITY, f64::min) - 1.5).collect();
        let hi: Vec<f64> = (0..2).map(|k| fit.cells.iter().map(|c| c.interior[k]).fold(f64::NEG_INFINITY, f64::max) + 1.5).collect();
        let grid = GridSpec { lower: lo, upper: hi, points: vec![301, 301] };
        for (z, v) in [(0.3, 0.1), (-1.0, 0.5), (2.0, -0.4)] {
            let a = smoothed_prob(&fit, &c.bandwidth, &[z], v).unwrap();
            let b = smoothed_prob_grid(&fit, &c.bandwidth, &grid, &[z], v).unwrap();
            assert!(b <= 1.0 + 1e-2);
            assert!((a - b).abs() < 2e-2, "{a} vs {b}");
        }
    }
}
