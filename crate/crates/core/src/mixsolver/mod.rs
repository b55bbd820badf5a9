//! The finite mixture program over arrangement cells.
//!
//! Primal: maximize `sum_i log g_i` with `g = A p`, `p` in the simplex.
//! Dual: maximize `sum_i log q_i` subject to `A^T q <= n`. At the optimum
//! `q_i = 1 / g_i` and every column carrying mass satisfies `(A^T q)_j = n`.
//!
//! The solver is an active-set constrained Newton method. It maximizes
//! `phi(p) = sum_i log g_i - n sum_j p_j` over `p >= 0` (whose maximizer lies in
//! the simplex), keeps a small support, adds the columns whose gradient
//! `d_j = sum_i a_ij / g_i` exceeds `n`, and takes a Newton step on the support
//! by solving a nonnegative least-squares problem.

mod nnls;
mod smooth;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;
use crate::scalar::Scalar;
use nnls::nnls_gram;

pub use smooth::{smooth, DensityGrid, GridSpec};

/// Masses below this are left out of reports.
pub const REPORT_THRESHOLD: f64 = 1e-3;

/// Complementarity is only checked on columns with at least this much mass.
const SUPPORT_MASS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MixtureSolution<T> {
    /// Mass on every column of the input matrix.
    pub p: Vec<T>,
    /// Fitted likelihood contributions `A p`.
    pub g: Vec<T>,
    /// Dual point, `1 / g` scaled down until `A^T q <= n`.
    pub q: Vec<T>,
    /// `sum_i log g_i`.
    pub loglik: T,
    /// `loglik / n`.
    pub mean_loglik: T,
    /// KKT residual of `(p, q)`.
    pub gap: T,
    pub iterations: usize,
}

impl<T: Scalar> MixtureSolution<T> {
    /// Upper bound on the optimal log-likelihood from the dual point.
    pub fn dual_bound(&self) -> T {
        -self.q.iter().map(|q| q.ln()).sum::<T>()
    }

    /// Indices and masses of the columns with mass at least `threshold`.
    pub fn support(&self, threshold: T) -> Vec<(usize, T)> {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, &m)| m >= threshold)
            .map(|(j, &m)| (j, m))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// KKT residual required for success.
    pub tol: f64,
    pub max_iter: usize,
    /// Columns admitted to the support per iteration.
    pub batch: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 10_000,
            batch: 16,
        }
    }
}

pub fn solve<T: Scalar>(a: &BinaryMatrix) -> Result<MixtureSolution<T>> {
    solve_with(a, &SolverOptions::default())
}

pub fn solve_with<T: Scalar>(a: &BinaryMatrix, opts: &SolverOptions) -> Result<MixtureSolution<T>> {
    let n = a.rows();
    let m = a.cols();
    if n == 0 || m == 0 {
        return Err(Error::invalid("mixture problem needs at least one row and one column"));
    }
    if let Some(row) = a.empty_row() {
        return Err(Error::ZeroRow { row });
    }
    let tol = T::lit(opts.tol).max(T::kkt_tol());
    let target = T::kkt_target().min(tol);
    let nt = T::lit(n as f64);

    let mut support = initial_cover(a);
    let mut p: Vec<T> = vec![T::one() / T::lit(support.len() as f64); support.len()];
    let mut g = fitted(a, &support, &p, n);
    let mut iterations = 0;
    let mut stalls = 0;
    let mut resid;

    loop {
        let w: Vec<T> = g.iter().map(|&x| T::one() / x).collect();
        let d = a.transpose_mul(&w);
        resid = residual(&d, &support, &p, nt);
        if resid <= target || iterations >= opts.max_iter || (stalls >= 3 && resid <= tol) || stalls >= 50 {
            break;
        }
        iterations += 1;

        let mut in_support = vec![false; m];
        support.iter().for_each(|&j| in_support[j] = true);
        let mut cand: Vec<usize> = (0..m)
            .filter(|&j| d[j] > nt * (T::one() + target) && !in_support[j])
            .collect();
        cand.sort_by(|&x, &y| d[y].partial_cmp(&d[x]).unwrap().then(x.cmp(&y)));
        cand.truncate(opts.batch.max(1));
        let mut cols = support.clone();
        cols.extend_from_slice(&cand);
        let mut x0 = p.clone();
        x0.resize(cols.len(), T::zero());

        let phi0 = objective(&g, &p);
        let improved = newton_step(a, &cols, &x0, &w, &d, &g, nt).and_then(|x| {
            line_search(a, &cols, &x0, &x, &g, &d, nt, phi0)
        });
        // Near the optimum the objective gain drops below round-off while the
        // residual is still shrinking, so only failed steps count as stalls.
        let (new_p, new_g) = match improved {
            Some(step) => {
                stalls = 0;
                step
            }
            None => {
                stalls += 1;
                em_steps(a, &cols, &x0, &cand, &g, n, 20)
            }
        };
        let keep: Vec<usize> = (0..cols.len()).filter(|&k| new_p[k] > T::zero()).collect();
        support = keep.iter().map(|&k| cols[k]).collect();
        p = keep.iter().map(|&k| new_p[k]).collect();
        let total: T = p.iter().copied().sum();
        p.iter_mut().for_each(|v| *v /= total);
        g = new_g.iter().map(|&v| v / total).collect();
        if iterations % 8 == 0 {
            // Refresh against accumulated round-off in the incremental updates.
            g = fitted(a, &support, &p, n);
        }
    }
    debug!("mixture solve: {iterations} iterations, residual {:e}, support {}", resid.as_f64(), support.len());

    g = fitted(a, &support, &p, n);
    let mut full = vec![T::zero(); m];
    for (&j, &v) in support.iter().zip(&p) {
        full[j] = v;
    }
    let w: Vec<T> = g.iter().map(|&x| T::one() / x).collect();
    let d = a.transpose_mul(&w);
    let scale = d.iter().fold(T::one(), |s, &v| s.max(v / nt));
    let q: Vec<T> = w.iter().map(|&v| v / scale).collect();
    let gap = kkt_residual(a, &full, &q)?;
    if gap > tol {
        return Err(Error::NotConverged {
            gap: gap.as_f64(),
            tol: tol.as_f64(),
        });
    }
    let loglik: T = g.iter().map(|v| v.ln()).sum();
    Ok(MixtureSolution {
        p: full,
        g,
        q,
        loglik,
        mean_loglik: loglik / nt,
        gap,
        iterations,
    })
}

/// Maximum of primal infeasibility, dual infeasibility
/// `max_j (A^T q - n)_+ / n`, complementarity `|(A^T q)_j - n| / n` over
/// columns with mass, and the pairing residual `max_i |q_i g_i - 1|`.
pub fn kkt_residual<T: Scalar>(a: &BinaryMatrix, p: &[T], q: &[T]) -> Result<T> {
    if p.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: p.len(),
        });
    }
    if q.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: q.len(),
        });
    }
    if p.iter().chain(q).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kkt_residual"));
    }
    let nt = T::lit(a.rows() as f64);
    let total: T = p.iter().copied().sum();
    let mut r = (total - T::one()).abs();
    for &v in p {
        r = r.max(-v);
    }
    let d = a.transpose_mul(q);
    let mass = T::lit(SUPPORT_MASS);
    for (&dj, &pj) in d.iter().zip(p) {
        r = r.max((dj - nt).max(T::zero()) / nt);
        if pj > mass {
            r = r.max((dj - nt).abs() / nt);
        }
    }
    let g = a.mul(p);
    for (&gi, &qi) in g.iter().zip(q) {
        r = r.max((gi * qi - T::one()).abs());
    }
    Ok(r)
}

/// Residual used for stopping; the scaled dual point is implicit in `d`.
fn residual<T: Scalar>(d: &[T], support: &[usize], p: &[T], nt: T) -> T {
    let scale = d.iter().fold(T::one(), |s, &v| s.max(v / nt));
    let mut r = scale - T::one();
    let mass = T::lit(SUPPORT_MASS);
    for (&j, &pj) in support.iter().zip(p) {
        if pj > mass {
            r = r.max((d[j] / scale - nt).abs() / nt);
        }
    }
    r
}

fn objective<T: Scalar>(g: &[T], p: &[T]) -> T {
    let nt = T::lit(g.len() as f64);
    g.iter().map(|v| v.ln()).sum::<T>() - nt * p.iter().copied().sum::<T>()
}

fn fitted<T: Scalar>(a: &BinaryMatrix, cols: &[usize], p: &[T], n: usize) -> Vec<T> {
    let mut g = vec![T::zero(); n];
    for (&j, &pj) in cols.iter().zip(p) {
        for i in a.column(j) {
            g[i] += pj;
        }
    }
    g
}

/// Greedy set cover of the rows: repeatedly takes the column covering the
/// most uncovered rows (ties to the lower index), with lazily refreshed gains.
fn initial_cover(a: &BinaryMatrix) -> Vec<usize> {
    use std::collections::BinaryHeap;
    let mut heap: BinaryHeap<(usize, std::cmp::Reverse<usize>)> =
        (0..a.cols()).map(|j| (a.column_count(j), std::cmp::Reverse(j))).collect();
    let mut covered = vec![false; a.rows()];
    let mut left = a.rows();
    let mut out = Vec::new();
    while left > 0 {
        let Some((gain, std::cmp::Reverse(j))) = heap.pop() else {
            break;
        };
        let rows = a.column(j);
        let fresh = rows.iter().filter(|&&i| !covered[i]).count();
        if fresh == 0 {
            continue;
        }
        if fresh < gain {
            heap.push((fresh, std::cmp::Reverse(j)));
            continue;
        }
        for i in rows {
            if !covered[i] {
                covered[i] = true;
                left -= 1;
            }
        }
        out.push(j);
    }
    out
}

/// Newton target on the support: the minimizer over `x >= 0` of the local
/// quadratic model `1/2 x'Gx - h'x`, `G = S'S`, `S_ij = a_ij / g_i`, `h = 2d - n`.
fn newton_step<T: Scalar>(
    a: &BinaryMatrix,
    cols: &[usize],
    x0: &[T],
    w: &[T],
    d: &[T],
    g: &[T],
    nt: T,
) -> Option<Vec<T>> {
    let s = cols.len();
    let w2: Vec<T> = w.iter().map(|&v| v * v).collect();
    let rows: Vec<Vec<T>> = cols
        .par_iter()
        .enumerate()
        .map(|(k, &j)| {
            let mut scratch = vec![T::zero(); g.len()];
            for i in a.column(j) {
                scratch[i] = w2[i];
            }
            (0..s)
                .map(|l| if l < k { T::zero() } else { a.column_dot(cols[l], &scratch) })
                .collect()
        })
        .collect();
    let mut gram = vec![T::zero(); s * s];
    for k in 0..s {
        for l in k..s {
            gram[k * s + l] = rows[k][l];
            gram[l * s + k] = rows[k][l];
        }
    }
    let h: Vec<T> = cols.iter().map(|&j| T::lit(2.0) * d[j] - nt).collect();
    let x = nnls_gram(&gram, &h, x0);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Armijo backtracking from `x0` towards `x` on `phi`.
#[allow(clippy::too_many_arguments)]
fn line_search<T: Scalar>(
    a: &BinaryMatrix,
    cols: &[usize],
    x0: &[T],
    x: &[T],
    g: &[T],
    d: &[T],
    nt: T,
    phi0: T,
) -> Option<(Vec<T>, Vec<T>)> {
    let dir: Vec<T> = x.iter().zip(x0).map(|(&a, &b)| a - b).collect();
    let slope: T = cols.iter().zip(&dir).map(|(&j, &v)| (d[j] - nt) * v).sum();
    if !(slope > T::zero()) {
        return None;
    }
    let mut dg = vec![T::zero(); g.len()];
    for (&j, &v) in cols.iter().zip(&dir) {
        if v != T::zero() {
            for i in a.column(j) {
                dg[i] += v;
            }
        }
    }
    // Below the rounding level of phi the Armijo test is noise; the quadratic
    // model is exact enough there to take the full step.
    let noise = T::epsilon() * T::lit(1e3) * (T::one() + phi0.abs());
    let mut alpha = T::one();
    for _ in 0..60 {
        let p: Vec<T> = x0
            .iter()
            .zip(&dir)
            .map(|(&b, &v)| (b + alpha * v).max(T::zero()))
            .collect();
        let p: Vec<T> = if alpha == T::one() { x.to_vec() } else { p };
        let gn: Vec<T> = g.iter().zip(&dg).map(|(&gi, &v)| gi + alpha * v).collect();
        // A fitted value that survives only as cancellation residue is a zero.
        let floor = T::epsilon() * T::lit(64.0);
        let positive = gn
            .iter()
            .zip(g)
            .zip(&dg)
            .all(|((&v, &gi), &di)| v > floor * (gi + (alpha * di).abs()));
        if positive {
            let phi = objective(&gn, &p);
            if phi >= phi0 + T::lit(1e-4) * alpha * slope || (alpha == T::one() && slope <= noise) {
                return Some((p, gn));
            }
        }
        alpha /= T::lit(2.0);
    }
    None
}

/// Multiplicative EM iterations, after mixing a little mass onto `extra`.
fn em_steps<T: Scalar>(
    a: &BinaryMatrix,
    cols: &[usize],
    x0: &[T],
    extra: &[usize],
    g: &[T],
    n: usize,
    iters: usize,
) -> (Vec<T>, Vec<T>) {
    let nt = T::lit(n as f64);
    let mut p = x0.to_vec();
    let mut g = g.to_vec();
    if !extra.is_empty() {
        let lambda = T::lit(0.01);
        let share = lambda / T::lit(extra.len() as f64);
        for (k, &j) in cols.iter().enumerate() {
            p[k] = p[k] * (T::one() - lambda) + if extra.contains(&j) { share } else { T::zero() };
        }
        g = fitted(a, cols, &p, n);
    }
    for _ in 0..iters {
        let w: Vec<T> = g.iter().map(|&x| T::one() / x).collect();
        for (k, &j) in cols.iter().enumerate() {
            p[k] *= a.column_dot(j, &w) / nt;
        }
        g = fitted(a, cols, &p, n);
    }
    (p, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: &[&[usize]]) -> BinaryMatrix {
        BinaryMatrix::from_columns(rows, cols.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    fn toy() -> BinaryMatrix {
        // Rows (p1+p2+p3)(p2+p3)(p1+p3)(p1+p2)(p1+p2).
        mat(5, &[&[0, 2, 3, 4], &[0, 1, 3, 4], &[0, 1, 2]])
    }

    #[test]
    fn toy_solution() {
        let s: MixtureSolution<f64> = solve(&toy()).unwrap();
        assert!((s.p[0] - 0.5).abs() < 1e-9 && (s.p[1] - 0.5).abs() < 1e-9 && s.p[2].abs() < 1e-9);
        assert!((s.loglik - 0.25f64.ln()).abs() < 1e-9);
        assert!(s.gap <= 1e-6);
        assert!((s.dual_bound() - s.loglik).abs() < 1e-6);
    }

    #[test]
    fn single_column() {
        let s: MixtureSolution<f64> = solve(&mat(3, &[&[0, 1, 2]])).unwrap();
        assert_eq!(s.p, vec![1.0]);
        assert_eq!(s.loglik, 0.0);
    }

    #[test]
    fn identity_splits_evenly() {
        let s: MixtureSolution<f64> = solve(&mat(2, &[&[0], &[1]])).unwrap();
        assert!((s.p[0] - 0.5).abs() < 1e-12);
        assert!((s.loglik - 2.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_row_is_reported() {
        let e = solve::<f64>(&mat(3, &[&[0], &[2]])).unwrap_err();
        assert!(matches!(e, Error::ZeroRow { row: 1 }));
    }

    #[test]
    fn kkt_examples() {
        let a = toy();
        let p = [0.5, 0.5, 0.0];
        let q: Vec<f64> = a.mul(&p).iter().map(|g| 1.0 / g).collect();
        assert!(kkt_residual(&a, &p, &q).unwrap() <= 1e-6);
        let u = [1.0 / 3.0; 3];
        let qu: Vec<f64> = a.mul(&u).iter().map(|g| 1.0 / g).collect();
        assert!(kkt_residual(&a, &u, &qu).unwrap() > 0.01);
        let one = mat(2, &[&[0, 1]]);
        assert_eq!(kkt_residual(&one, &[1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(kkt_residual(&one, &[1.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn single_precision_toy() {
        let s: MixtureSolution<f32> = solve(&toy()).unwrap();
        assert!((s.p[0] - 0.5).abs() < 1e-4 && (s.p[1] - 0.5).abs() < 1e-4);
        assert!((s.loglik - 0.25f32.ln()).abs() < 1e-4);
    }
}
