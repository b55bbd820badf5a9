use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-8;
/// Coefficient norm beyond which the data are treated as separated.
const CAP: f64 = 1e3;

/// Logistic regression on `(1, z, v, w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub coef: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    /// The likelihood has no finite maximizer; `coef` is scaled to norm `CAP`.
    pub separated: bool,
    /// Standard errors from the inverse information; empty when separated.
    pub se: Vec<f64>,
}

fn features(z: &[f64], v: f64, w: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 + z.len() + w.len());
    x.push(1.0);
    x.extend_from_slice(z);
    x.push(v);
    x.extend_from_slice(w);
    x
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl LogitFit {
    pub fn predict(&self, z: &[f64], v: f64, w: &[f64]) -> f64 {
        let x = features(z, v, w);
        sigmoid(x.iter().zip(&self.coef).map(|(a, b)| a * b).sum())
    }
}

/// Maximum likelihood by damped Newton iterations.
pub fn fit_logit(data: &Dataset<f64>) -> Result<LogitFit> {
    let n = data.len();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| features(&data.z[i], data.v[i], &data.w[i])).collect();
    let k = rows[0].len();
    if n < k {
        return Err(Error::invalid(format!("logit needs at least {k} observations")));
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let y = DVector::from_iterator(n, data.y.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    let loglik = |b: &DVector<f64>| -> f64 {
        let eta = &x * b;
        (0..n).map(|i| y[i] * eta[i] - softplus(eta[i])).sum()
    };

    let mut b = DVector::zeros(k);
    let mut ll = loglik(&b);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let eta = &x * &b;
        let mu = eta.map(sigmoid);
        let grad = x.transpose() * (&y - &mu);
        let wts = mu.map(|m| (m * (1.0 - m)).max(1e-300));
        let mut info = DMatrix::zeros(k, k);
        for i in 0..n {
            let r = x.row(i);
            info += wts[i] * r.transpose() * r;
        }
        let Some(chol) = info.clone().cholesky() else {
            break;
        };
        let step = chol.solve(&grad);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let cand = &b + t * &step;
            let lc = loglik(&cand);
            if lc >= ll - 1e-12 * (1.0 + ll.abs()) {
                b = cand;
                ll = lc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || b.norm() > CAP {
            break;
        }
        if (t * &step).amax() < TOL {
            converged = true;
            break;
        }
    }

    let separated = !converged || b.norm() > CAP;
    if separated {
        let norm = b.norm();
        if norm > CAP {
            b *= CAP / norm;
        }
        ll = loglik(&b);
    }
    let se = if separated {
        Vec::new()
    } else {
        let mu = (&x * &b).map(sigmoid);
        let mut info = DMatrix::zeros(k, k);
        for i in 0..n {
            let r = x.row(i);
            info += mu[i] * (1.0 - mu[i]) * r.transpose() * r;
        }
        info.try_inverse()
            .map(|inv| (0..k).map(|j| inv[(j, j)].max(0.0).sqrt()).collect())
            .unwrap_or_default()
    };
    Ok(LogitFit {
        coef: b.iter().copied().collect(),
        loglik: ll,
        iterations,
        separated,
        se,
    })
}
