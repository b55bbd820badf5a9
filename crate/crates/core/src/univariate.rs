//! The intercept-only case: `y_i = 1{eta_i <= v_i}` with scalar `eta`.
//!
//! Observation `i` is compatible with `R_i = (-inf, v_i]` when `y_i = 1` and
//! with `(v_i, inf)` otherwise. The order statistics of `v` split the line
//! into `n + 1` intervals `I_1 = (-inf, v_(1)]`, `I_j = (v_(j-1), v_(j)]`,
//! `I_{n+1} = (v_(n), inf)`, each contained in or disjoint from every `R_i`.
//!
//! Note the orientation: this is the reflection `eta -> -eta` of the
//! arrangement convention `y = 1{Z . eta >= v}`; see [`to_hyperplanes`].

use serde::{Deserialize, Serialize};

use crate::arrangement::Hyperplane;
use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;
use crate::mixsolver::{solve, MixtureSolution};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IntervalPartition<T> {
    /// Sorted `v`.
    pub breakpoints: Vec<T>,
    /// `n + 1` entries, one per interval.
    pub counts: Vec<usize>,
    /// One representative interval per locally maximal run of counts.
    pub maximal: Vec<usize>,
}

impl<T: Scalar> IntervalPartition<T> {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(lower, upper)` of interval `j`; `None` stands for an infinite end.
    pub fn interval(&self, j: usize) -> (Option<T>, Option<T>) {
        let n = self.breakpoints.len();
        let lower = (j > 0).then(|| self.breakpoints[j - 1]);
        let upper = (j < n).then(|| self.breakpoints[j]);
        (lower, upper)
    }

    fn is_empty_interval(&self, j: usize) -> bool {
        matches!(self.interval(j), (Some(a), Some(b)) if a >= b)
    }

    /// Whether interval `j` lies inside the set compatible with observation `(v, y)`.
    pub fn contained(&self, j: usize, v: T, y: bool) -> bool {
        let (lower, upper) = self.interval(j);
        if y {
            upper.is_some_and(|u| u <= v)
        } else {
            lower.is_some_and(|l| l >= v)
        }
    }
}

fn check(v: &[impl Scalar], y: &[bool]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    if v.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: y.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("v"));
    }
    Ok(())
}

/// Counts `c_j = #{i : I_j inside R_i}` and the locally maximal intervals.
///
/// Runs of equal counts flanked by strictly smaller ones are maximal; the
/// rightmost interval of the run represents it. Empty intervals produced by
/// tied breakpoints are never selected.
pub fn interval_counts<T: Scalar>(v: &[T], y: &[bool]) -> Result<IntervalPartition<T>> {
    check(v, y)?;
    let n = v.len();
    let mut breakpoints = v.to_vec();
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ones: Vec<T> = v.iter().zip(y).filter(|(_, &b)| b).map(|(&x, _)| x).collect();
    let mut zeros: Vec<T> = v.iter().zip(y).filter(|(_, &b)| !b).map(|(&x, _)| x).collect();
    ones.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let counts: Vec<usize> = (0..=n)
        .map(|j| {
            // Ones with v_i >= upper end, zeros with v_i <= lower end.
            let c1 = if j < n {
                ones.len() - ones.partition_point(|&x| x < breakpoints[j])
            } else {
                0
            };
            let c0 = if j > 0 {
                zeros.partition_point(|&x| x <= breakpoints[j - 1])
            } else {
                0
            };
            c0 + c1
        })
        .collect();

    let mut part = IntervalPartition {
        breakpoints,
        counts,
        maximal: Vec::new(),
    };
    let live: Vec<usize> = (0..=n).filter(|&j| !part.is_empty_interval(j)).collect();
    let mut start = 0;
    while start < live.len() {
        let c = part.counts[live[start]];
        let mut end = start;
        while end + 1 < live.len() && part.counts[live[end + 1]] == c {
            end += 1;
        }
        let left_ok = start == 0 || part.counts[live[start - 1]] < c;
        let right_ok = end + 1 == live.len() || part.counts[live[end + 1]] < c;
        if left_ok && right_ok {
            part.maximal.push(live[end]);
        }
        start = end + 1;
    }
    Ok(part)
}

/// Shifts the `y = 0` members of every tie group that also contains a
/// `y = 1` observation by `+delta`.
///
/// The default `delta` is half the smallest positive gap, at least `1e-10`.
pub fn tie_adjust<T: Scalar>(v: &[T], y: &[bool], delta: Option<T>) -> Result<Vec<T>> {
    check(v, y)?;
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min_gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > T::zero())
        .fold(T::infinity(), T::min);
    let delta = match delta {
        Some(d) => d,
        None if min_gap.is_finite() => (min_gap / T::lit(2.0)).max(T::lit(1e-10)),
        None => T::one(),
    };
    if !(delta > T::zero()) || delta >= min_gap {
        return Err(Error::invalid(format!(
            "tie shift {delta} must be positive and below the smallest gap {min_gap}"
        )));
    }
    let mut out = v.to_vec();
    for i in 0..v.len() {
        if !y[i] && (0..v.len()).any(|k| y[k] && v[k] == v[i]) {
            out[i] = v[i] + delta;
        }
    }
    Ok(out)
}

fn has_conflicting_ties<T: Scalar>(v: &[T], y: &[bool]) -> bool {
    let mut pairs: Vec<(T, bool)> = v.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.windows(2).any(|w| w[0].0 == w[1].0 && w[0].1 != w[1].1)
}

/// A support interval of the fitted distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SupportInterval<T> {
    pub lower: Option<T>,
    pub upper: Option<T>,
    pub mass: T,
}

impl<T: Scalar> SupportInterval<T> {
    /// Location under the right-end convention; the unbounded last interval
    /// reports its finite left end.
    pub fn location(&self) -> T {
        self.upper.or(self.lower).unwrap_or(T::zero())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct UnivariateFit<T> {
    /// `v` after tie adjustment.
    pub v: Vec<T>,
    pub partition: IntervalPartition<T>,
    /// Interval index of each solver column.
    pub columns: Vec<usize>,
    pub solution: MixtureSolution<T>,
    /// Intervals with positive mass, left to right.
    pub support: Vec<SupportInterval<T>>,
}

/// Reduced NPMLE on the locally maximal intervals.
pub fn fit_univariate<T: Scalar>(v: &[T], y: &[bool]) -> Result<UnivariateFit<T>> {
    let v = if has_conflicting_ties(v, y) {
        tie_adjust(v, y, None)?
    } else {
        check(v, y)?;
        v.to_vec()
    };
    let partition = interval_counts(&v, y)?;
    let columns = partition.maximal.clone();
    fit_on_columns(v, y, partition, columns)
}

/// Same program on every nonempty interval, for checking that pruning is lossless.
pub fn fit_univariate_all<T: Scalar>(v: &[T], y: &[bool]) -> Result<UnivariateFit<T>> {
    let v = if has_conflicting_ties(v, y) {
        tie_adjust(v, y, None)?
    } else {
        check(v, y)?;
        v.to_vec()
    };
    let partition = interval_counts(&v, y)?;
    let columns = (0..partition.len()).filter(|&j| !partition.is_empty_interval(j)).collect();
    fit_on_columns(v, y, partition, columns)
}

fn fit_on_columns<T: Scalar>(
    v: Vec<T>,
    y: &[bool],
    partition: IntervalPartition<T>,
    columns: Vec<usize>,
) -> Result<UnivariateFit<T>> {
    let lists = columns
        .iter()
        .map(|&j| (0..v.len()).filter(|&i| partition.contained(j, v[i], y[i])).collect())
        .collect();
    let a = BinaryMatrix::from_columns(v.len(), lists)?;
    let solution: MixtureSolution<T> = solve(&a)?;
    let mut support: Vec<SupportInterval<T>> = columns
        .iter()
        .zip(&solution.p)
        .filter(|(_, &m)| m > T::zero())
        .map(|(&j, &mass)| {
            let (lower, upper) = partition.interval(j);
            SupportInterval { lower, upper, mass }
        })
        .collect();
    support.sort_by(|a, b| a.location().partial_cmp(&b.location()).unwrap());
    Ok(UnivariateFit {
        v,
        partition,
        columns,
        solution,
        support,
    })
}

/// The same sample as hyperplanes in the arrangement convention
/// (`Z = (1)`, threshold `-v`).
pub fn to_hyperplanes<T: Scalar>(v: &[T], y: &[bool]) -> Result<Vec<Hyperplane<T>>> {
    check(v, y)?;
    v.iter().zip(y).map(|(&x, &b)| Hyperplane::new(&[], -x, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_observation() {
        let p = interval_counts(&[0.0], &[true]).unwrap();
        assert_eq!(p.counts, vec![1, 0]);
        assert_eq!(p.maximal, vec![0]);
        assert_eq!(p.interval(0), (None, Some(0.0)));
    }

    #[test]
    fn two_observations() {
        let p = interval_counts(&[0.0, 1.0], &[true, false]).unwrap();
        assert_eq!(p.counts, vec![1, 0, 1]);
        assert_eq!(p.maximal, vec![0, 2]);
        let f: UnivariateFit<f64> = fit_univariate(&[0.0, 1.0], &[true, false]).unwrap();
        assert!((f.solution.loglik - 2.0 * 0.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn interior_interval_gets_all_mass() {
        let f: UnivariateFit<f64> = fit_univariate(&[0.0, 1.0], &[false, true]).unwrap();
        assert_eq!(f.partition.counts, vec![1, 2, 1]);
        assert_eq!(f.support.len(), 1);
        assert_eq!((f.support[0].lower, f.support[0].upper), (Some(0.0), Some(1.0)));
        assert!((f.support[0].mass - 1.0).abs() < 1e-12);
        assert!(f.solution.loglik.abs() < 1e-12);
    }

    #[test]
    fn all_zero_responses() {
        let v = [0.3, -1.0, 2.0, 0.5];
        let p = interval_counts(&v, &[false; 4]).unwrap();
        assert_eq!(p.counts, vec![0, 1, 2, 3, 4]);
        assert_eq!(p.maximal, vec![4]);
        let f: UnivariateFit<f64> = fit_univariate(&v, &[false; 4]).unwrap();
        assert_eq!(f.support.len(), 1);
        assert_eq!(f.support[0].upper, None);
    }

    #[test]
    fn tie_examples() {
        let d = 0.25;
        assert_eq!(tie_adjust(&[1.0, 1.0], &[true, false], Some(d)).unwrap(), vec![1.0, 1.25]);
        assert_eq!(tie_adjust(&[1.0, 1.0], &[true, true], Some(d)).unwrap(), vec![1.0, 1.0]);
        assert_eq!(tie_adjust(&[0.0, 1.0, 3.0], &[true, false, true], None).unwrap(), vec![0.0, 1.0, 3.0]);
        assert!(tie_adjust(&[0.0, 1.0, 1.0], &[true, false, true], Some(1.0)).is_err());
        let v = tie_adjust(&[0.0, 1.0, 1.0], &[true, false, true], None).unwrap();
        assert_eq!(v, vec![0.0, 1.5, 1.0]);
    }

    #[test]
    fn tied_breakpoints_skip_empty_intervals() {
        let p = interval_counts(&[1.0, 1.0], &[true, true]).unwrap();
        assert_eq!(p.counts, vec![2, 2, 0]);
        assert_eq!(p.maximal, vec![0]);
        let p = interval_counts(&[1.0, 1.0, 2.0], &[false, false, true]).unwrap();
        assert_eq!(p.counts, vec![1, 3, 3, 2]);
        assert_eq!(p.maximal, vec![2]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(interval_counts::<f64>(&[], &[]).is_err());
        assert!(interval_counts(&[f64::NAN], &[true]).is_err());
        assert!(interval_counts(&[0.0], &[true, false]).is_err());
    }
}
