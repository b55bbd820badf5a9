//! Set-valued predictions from a fitted mixture.
//!
//! The fit identifies how much mass each cell carries but not where inside the
//! cell it sits. The probability of the query halfspace
//! `H+(z0, v0) = {eta : Z0 . eta >= v0}` is therefore only bounded: cells inside
//! `H+` always count, cells the query hyperplane crosses may or may not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrangement::slack_problem;
use crate::error::{Error, Result};
use crate::lp::SlackProblem;
use crate::model::{FittedCell, ModelFit};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectKind {
    /// Probability of `H+(z0, v0)` itself.
    Level,
    /// Shift of the threshold: `v0 -> v0 - delta`.
    Fare,
    /// Shift of the first covariate: `z0[0] -> z0[0] - delta`.
    Time,
}

impl std::fmt::Display for EffectKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EffectKind::Level => "level",
            EffectKind::Fare => "fare",
            EffectKind::Time => "time",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EffectBound<T> {
    pub lower: T,
    pub upper: T,
    pub z0: Vec<T>,
    pub v0: T,
    pub delta: T,
    pub kind: EffectKind,
}

/// Position of a cell relative to a query halfspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
    Crossed,
}

fn check_query<T: Scalar>(fit: &ModelFit<T>, z0: &[T], v0: T) -> Result<Vec<T>> {
    if z0.len() + 1 != fit.dim() {
        return Err(Error::DimensionMismatch {
            expected: fit.dim() - 1,
            found: z0.len(),
        });
    }
    if !v0.is_finite() || z0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("query"));
    }
    let mut normal = Vec::with_capacity(z0.len() + 1);
    normal.push(T::one());
    normal.extend_from_slice(z0);
    Ok(normal)
}

fn side_of<T: Scalar>(base: &SlackProblem<T>, cell: &FittedCell<T>, normal: &[T], v0: T) -> Side {
    let tau = T::interior_tol();
    let mut prob = base.clone();
    prob.push(normal, v0, true);
    let pos = prob.solve_from(&cell.interior).slack;
    prob.pop();
    prob.push(normal, v0, false);
    let neg = prob.solve_from(&cell.interior).slack;
    match (pos > tau, neg > tau) {
        (true, true) => Side::Crossed,
        (true, false) => Side::Inside,
        (false, true) => Side::Outside,
        // Too thin to resolve either way; the stored point decides.
        (false, false) => {
            if dot(normal, &cell.interior) >= v0 {
                Side::Inside
            } else {
                Side::Outside
            }
        }
    }
}

/// Classifies one fitted cell against `H+(z0, v0)`. A cell that only touches
/// the query hyperplane on its boundary is not crossed.
pub fn classify<T: Scalar>(fit: &ModelFit<T>, cell: usize, z0: &[T], v0: T) -> Result<Side> {
    let normal = check_query(fit, z0, v0)?;
    let c = fit.cells.get(cell).ok_or_else(|| Error::invalid(format!("no fitted cell {cell}")))?;
    Ok(side_of(&slack_problem(&c.sign, &fit.hyperplanes), c, &normal, v0))
}

/// Bounds on the probability of `H+(z0, v0)` over all cells with positive mass.
pub fn prob_bounds<T: Scalar>(fit: &ModelFit<T>, z0: &[T], v0: T) -> Result<EffectBound<T>> {
    prob_bounds_above(fit, z0, v0, T::zero())
}

/// As [`prob_bounds`], ignoring cells with mass below `threshold` and
/// renormalizing the rest.
pub fn prob_bounds_above<T: Scalar>(fit: &ModelFit<T>, z0: &[T], v0: T, threshold: T) -> Result<EffectBound<T>> {
    let normal = check_query(fit, z0, v0)?;
    let kept: Vec<&FittedCell<T>> = fit.cells.iter().filter(|c| c.mass > threshold.max(T::zero())).collect();
    let total: T = kept.iter().map(|c| c.mass).sum();
    if !(total > T::zero()) {
        return Err(Error::invalid("no cells above the mass threshold"));
    }
    let sides: Vec<Side> = kept
        .par_iter()
        .map(|c| side_of(&slack_problem(&c.sign, &fit.hyperplanes), c, &normal, v0))
        .collect();
    let (mut inside, mut crossed) = (T::zero(), T::zero());
    for (c, s) in kept.iter().zip(&sides) {
        match s {
            Side::Inside => inside += c.mass,
            Side::Crossed => crossed += c.mass,
            Side::Outside => {}
        }
    }
    let lower = (inside / total).min(T::one());
    let upper = ((inside + crossed) / total).min(T::one()).max(lower);
    Ok(EffectBound {
        lower,
        upper,
        z0: z0.to_vec(),
        v0,
        delta: T::zero(),
        kind: EffectKind::Level,
    })
}

/// Bounds on `P(H+(z0, v0)) - P(H+(shifted query))`, where the shift lowers
/// `v0` (fare) or the first covariate (time) by `delta`.
pub fn marginal_effect<T: Scalar>(fit: &ModelFit<T>, z0: &[T], v0: T, delta: T, kind: EffectKind) -> Result<EffectBound<T>> {
    if !delta.is_finite() {
        return Err(Error::NonFinite("delta"));
    }
    if delta < T::zero() {
        return Err(Error::invalid("delta must be nonnegative"));
    }
    let base = prob_bounds(fit, z0, v0)?;
    let (z1, v1) = match kind {
        EffectKind::Level => return Ok(base),
        EffectKind::Fare => (z0.to_vec(), v0 - delta),
        EffectKind::Time => {
            if z0.is_empty() {
                return Err(Error::invalid("time effects need a covariate"));
            }
            let mut z = z0.to_vec();
            z[0] -= delta;
            (z, v0)
        }
    };
    let shifted = prob_bounds(fit, &z1, v1)?;
    Ok(EffectBound {
        lower: base.lower - shifted.upper,
        upper: base.upper - shifted.lower,
        z0: z0.to_vec(),
        v0,
        delta,
        kind,
    })
}

/// Probability of `H+(z0, v0)` with every cell's mass placed at its stored
/// interior point.
pub fn plugin_prob<T: Scalar>(fit: &ModelFit<T>, z0: &[T], v0: T) -> Result<T> {
    let normal = check_query(fit, z0, v0)?;
    let total: T = fit.cells.iter().map(|c| c.mass).sum();
    let hit: T = fit
        .cells
        .iter()
        .filter(|c| dot(&normal, &c.interior) >= v0)
        .map(|c| c.mass)
        .sum();
    Ok(hit / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fit_given_theta, Dataset, FitOptions};

    fn toy_fit() -> ModelFit<f64> {
        let rows = [(0.41, 1.22, true), (0.40, 0.36, false), (0.17, 0.24, true), (-0.79, 0.99, false), (-0.94, 0.55, false)];
        let data = Dataset::without_w(
            rows.iter().map(|r| r.2).collect(),
            rows.iter().map(|r| vec![r.0]).collect(),
            rows.iter().map(|r| -r.1).collect(),
        )
        .unwrap();
        fit_given_theta(&data, &[], &FitOptions::default()).unwrap()
    }

    #[test]
    fn everything_inside() {
        // Both mass cells satisfy observation 1 (y = 1) and violate nothing of
        // observation 4 (y = 0); moving those lines away keeps the cells on one side.
        let fit = toy_fit();
        let b = prob_bounds(&fit, &[0.41], -1.22 - 0.5).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        let b = prob_bounds(&fit, &[-0.79], -0.99 + 0.5).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
    }

    #[test]
    fn data_hyperplanes_cross_nothing() {
        let fit = toy_fit();
        for h in fit.hyperplanes.clone() {
            let b = prob_bounds(&fit, h.covariates(), h.threshold()).unwrap();
            assert_eq!(b.lower, b.upper);
        }
    }

    #[test]
    fn separating_query_splits_mass() {
        // Hyperplane 2 separates the two cells that carry mass.
        let fit = toy_fit();
        let b = prob_bounds(&fit, &[0.40], -0.36).unwrap();
        assert!((b.lower - 0.5).abs() < 1e-9 && (b.upper - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_shift_contains_zero() {
        let fit = toy_fit();
        for kind in [EffectKind::Fare, EffectKind::Time] {
            let e = marginal_effect(&fit, &[0.1], -0.5, 0.0, kind).unwrap();
            assert!(e.lower <= 0.0 && 0.0 <= e.upper);
            assert!((e.lower + e.upper).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_queries() {
        let fit = toy_fit();
        assert!(prob_bounds(&fit, &[f64::NAN], 0.0).is_err());
        assert!(prob_bounds(&fit, &[0.0, 1.0], 0.0).is_err());
        assert!(marginal_effect(&fit, &[0.0], 0.0, -1.0, EffectKind::Fare).is_err());
    }

    #[test]
    fn plugin_inside_bounds() {
        let fit = toy_fit();
        for k in 0..40 {
            let z = -2.0 + 0.1 * k as f64;
            let v = 1.5 - 0.07 * k as f64;
            let b = prob_bounds(&fit, &[z], v).unwrap();
            let p = plugin_prob(&fit, &[z], v).unwrap();
            assert!(b.lower - 1e-12 <= p && p <= b.upper + 1e-12);
        }
    }
}
