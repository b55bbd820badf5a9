//! Nonnegative quadratic programs `min 1/2 x'Gx - h'x, x >= 0` by the
//! Lawson-Hanson active-set method, working on the Gram matrix directly.

use crate::scalar::Scalar;

/// `g` is the symmetric `s x s` matrix in row-major order; `x0 >= 0` is a warm
/// start whose positive entries seed the passive set.
pub(crate) fn nnls_gram<T: Scalar>(g: &[T], h: &[T], x0: &[T]) -> Vec<T> {
    let s = h.len();
    debug_assert_eq!(g.len(), s * s);
    let hmax = h.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let dmax = (0..s).fold(T::zero(), |m, k| m.max(g[k * s + k]));
    let tol = T::epsilon() * T::lit(1e3) * (T::one() + hmax);
    let ridge = T::epsilon() * T::lit(10.0) * dmax;

    let mut x: Vec<T> = x0.iter().map(|&v| v.max(T::zero())).collect();
    let mut passive: Vec<bool> = x.iter().map(|&v| v > T::zero()).collect();
    let max_outer = 3 * s + 10;

    for outer in 0..=max_outer {
        // Inner loop: move to the unconstrained optimum on the passive set,
        // stepping back whenever that would leave the feasible region.
        loop {
            let idx: Vec<usize> = (0..s).filter(|&k| passive[k]).collect();
            if idx.is_empty() {
                x.iter_mut().for_each(|v| *v = T::zero());
                break;
            }
            let z = solve_sub(g, h, s, &idx, ridge);
            if z.iter().all(|&v| v > T::zero()) {
                x.iter_mut().for_each(|v| *v = T::zero());
                for (&k, &v) in idx.iter().zip(&z) {
                    x[k] = v;
                }
                break;
            }
            let mut alpha = T::one();
            let mut block = idx[0];
            for (&k, &v) in idx.iter().zip(&z) {
                if v <= T::zero() {
                    let a = x[k] / (x[k] - v);
                    if a < alpha {
                        alpha = a;
                        block = k;
                    }
                }
            }
            for (&k, &v) in idx.iter().zip(&z) {
                let xk = x[k];
                x[k] = xk + alpha * (v - xk);
                if x[k] <= T::zero() || k == block {
                    x[k] = T::zero();
                    passive[k] = false;
                }
            }
        }
        if outer == max_outer {
            break;
        }
        // Outer step: add the most promising active variable.
        let mut best = None;
        let mut best_w = tol;
        for k in (0..s).filter(|&k| !passive[k]) {
            let w = h[k] - (0..s).fold(T::zero(), |acc, l| acc + g[k * s + l] * x[l]);
            if w > best_w {
                best_w = w;
                best = Some(k);
            }
        }
        match best {
            Some(k) => passive[k] = true,
            None => break,
        }
    }
    x
}

/// Solves `(G_PP + ridge I) z = h_P` by Cholesky.
fn solve_sub<T: Scalar>(g: &[T], h: &[T], s: usize, idx: &[usize], ridge: T) -> Vec<T> {
    let m = idx.len();
    let mut l = vec![T::zero(); m * m];
    for a in 0..m {
        for b in 0..=a {
            let mut v = g[idx[a] * s + idx[b]];
            if a == b {
                v += ridge;
            }
            for c in 0..b {
                v -= l[a * m + c] * l[b * m + c];
            }
            if a == b {
                l[a * m + a] = v.max(ridge.max(T::min_positive_value())).sqrt();
            } else {
                l[a * m + b] = v / l[b * m + b];
            }
        }
    }
    let rhs: Vec<T> = idx.iter().map(|&k| h[k]).collect();
    let mut z = chol_solve(&l, m, rhs.clone());
    // Iterative refinement removes the bias the ridge introduces.
    for _ in 0..3 {
        let r: Vec<T> = (0..m)
            .map(|a| rhs[a] - (0..m).fold(T::zero(), |acc, b| acc + g[idx[a] * s + idx[b]] * z[b]))
            .collect();
        let dz = chol_solve(&l, m, r);
        z.iter_mut().zip(&dz).for_each(|(v, &e)| *v += e);
    }
    z
}

fn chol_solve<T: Scalar>(l: &[T], m: usize, mut z: Vec<T>) -> Vec<T> {
    for a in 0..m {
        for c in 0..a {
            let t = l[a * m + c] * z[c];
            z[a] -= t;
        }
        z[a] /= l[a * m + a];
    }
    for a in (0..m).rev() {
        for c in a + 1..m {
            let t = l[c * m + a] * z[c];
            z[a] -= t;
        }
        z[a] /= l[a * m + a];
    }
    z
}
