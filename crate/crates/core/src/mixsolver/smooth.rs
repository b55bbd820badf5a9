use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A rectangular grid: `points[k]` equally spaced nodes on `[lower[k], upper[k]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridSpec<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub points: Vec<usize>,
}

impl<T: Scalar> GridSpec<T> {
    pub fn axes(&self) -> Vec<Vec<T>> {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(&self.points)
            .map(|((&lo, &hi), &m)| {
                if m == 1 {
                    return vec![lo];
                }
                let step = (hi - lo) / T::lit((m - 1) as f64);
                (0..m).map(|k| lo + step * T::lit(k as f64)).collect()
            })
            .collect()
    }
}

/// Density values on a grid, row-major with the last coordinate fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DensityGrid<T> {
    pub axes: Vec<Vec<T>>,
    pub values: Vec<T>,
}

impl<T: Scalar> DensityGrid<T> {
    /// Coordinates of node `flat`.
    pub fn node(&self, flat: usize) -> Vec<T> {
        let mut rest = flat;
        let mut out = vec![T::zero(); self.axes.len()];
        for k in (0..self.axes.len()).rev() {
            let m = self.axes[k].len();
            out[k] = self.axes[k][rest % m];
            rest /= m;
        }
        out
    }

    /// Riemann sum of the values.
    pub fn integral(&self) -> T {
        let vol = self.axes.iter().fold(T::one(), |v, ax| {
            if ax.len() < 2 {
                v
            } else {
                v * (ax[1] - ax[0])
            }
        });
        self.values.iter().copied().sum::<T>() * vol
    }
}

/// Evaluates `sum_j p_j N(x; support_j, diag(bandwidth))` on the grid;
/// `bandwidth` holds variances.
pub fn smooth<T: Scalar>(
    support: &[Vec<T>],
    masses: &[T],
    bandwidth: &[T],
    grid: &GridSpec<T>,
) -> Result<DensityGrid<T>> {
    let d = bandwidth.len();
    if bandwidth.iter().any(|&b| !(b > T::zero()) || !b.is_finite()) {
        return Err(Error::invalid("bandwidth entries must be positive"));
    }
    if support.len() != masses.len() {
        return Err(Error::DimensionMismatch {
            expected: support.len(),
            found: masses.len(),
        });
    }
    for dims in [grid.lower.len(), grid.upper.len(), grid.points.len()]
        .into_iter()
        .chain(support.iter().map(Vec::len))
    {
        if dims != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: dims,
            });
        }
    }
    if grid.points.contains(&0) {
        return Err(Error::invalid("grid needs at least one point per axis"));
    }
    let two_pi = T::lit(std::f64::consts::TAU);
    let norm = bandwidth.iter().fold(T::one(), |acc, &b| acc / (two_pi * b).sqrt());
    let axes = grid.axes();
    let total: usize = grid.points.iter().product();
    let mut out = DensityGrid {
        axes,
        values: vec![T::zero(); total],
    };
    for flat in 0..total {
        let x = out.node(flat);
        let mut v = T::zero();
        for (mu, &pj) in support.iter().zip(masses) {
            let q = x
                .iter()
                .zip(mu)
                .zip(bandwidth)
                .fold(T::zero(), |acc, ((&xi, &mi), &b)| acc + (xi - mi) * (xi - mi) / b);
            v += pj * (-q / T::lit(2.0)).exp();
        }
        out.values[flat] = v * norm;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(half: f64, m: usize) -> GridSpec<f64> {
        GridSpec {
            lower: vec![-half, -half],
            upper: vec![half, half],
            points: vec![m, m],
        }
    }

    #[test]
    fn single_point_peak() {
        let g = smooth(&[vec![0.0, 0.0]], &[1.0], &[0.04, 0.04], &grid(1.0, 21)).unwrap();
        let peak = g.values.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1.0 / (std::f64::consts::TAU * 0.04)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_bimodal() {
        let sup = [vec![0.7, -0.7], vec![-0.7, 0.7]];
        let g = smooth(&sup, &[0.5, 0.5], &[0.04, 0.04], &grid(1.4, 29)).unwrap();
        let at = |x: f64, y: f64| {
            let ax = &g.axes[0];
            let i = ax.iter().position(|&a| (a - x).abs() < 1e-9).unwrap();
            let j = ax.iter().position(|&a| (a - y).abs() < 1e-9).unwrap();
            g.values[i * ax.len() + j]
        };
        assert!((at(0.7, -0.7) - at(-0.7, 0.7)).abs() < 1e-12);
        assert!(at(0.7, -0.7) > 10.0 * at(0.0, 0.0));
    }

    #[test]
    fn riemann_sum_near_one() {
        let g = smooth(&[vec![0.1, -0.2]], &[1.0], &[0.04, 0.04], &GridSpec {
            lower: vec![0.1 - 1.0, -0.2 - 1.0],
            upper: vec![0.1 + 1.0, -0.2 + 1.0],
            points: vec![81, 81],
        })
        .unwrap();
        assert!((g.integral() - 1.0f64).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_bandwidth() {
        assert!(smooth(&[vec![0.0, 0.0]], &[1.0], &[0.0, 0.04], &grid(1.0, 3)).is_err());
    }
}
