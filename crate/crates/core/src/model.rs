//! The full model `y = 1{Z . eta >= v - w . theta}` with random `eta` and a
//! fixed parameter `theta`.
//!
//! For fixed `theta` the thresholds are known, so the NPMLE of the
//! distribution of `eta` is a mixture over the cells of one arrangement.
//! `theta` itself is estimated by maximizing that profile likelihood.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrangement::{
    build_adjacency, enumerate, locally_maximal, perturb_thresholds, Arrangement, EnumerateOptions, Hyperplane,
};
use crate::error::{Error, Result};
use crate::mixsolver::{solve_with, SolverOptions};
use crate::scalar::Scalar;
use crate::sign::SignVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dataset<T> {
    pub y: Vec<bool>,
    /// `n` rows of `d - 1` covariates with random coefficients.
    pub z: Vec<Vec<T>>,
    /// The covariate whose coefficient is normalized to one.
    pub v: Vec<T>,
    /// `n` rows of `p` covariates with fixed coefficients; empty rows when `p = 0`.
    pub w: Vec<Vec<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(y: Vec<bool>, z: Vec<Vec<T>>, v: Vec<T>, w: Vec<Vec<T>>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::invalid("empty dataset"));
        }
        for len in [z.len(), v.len(), w.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        let dz = z[0].len();
        let dw = w[0].len();
        for (zr, wr) in z.iter().zip(&w) {
            if zr.len() != dz {
                return Err(Error::DimensionMismatch { expected: dz, found: zr.len() });
            }
            if wr.len() != dw {
                return Err(Error::DimensionMismatch { expected: dw, found: wr.len() });
            }
        }
        if v.iter().chain(z.iter().flatten()).chain(w.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        let mut distinct = v.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        if distinct.len() < dz + 1 {
            return Err(Error::invalid(format!(
                "v takes {} distinct values; at least d = {} are needed",
                distinct.len(),
                dz + 1
            )));
        }
        Ok(Dataset { y, z, v, w })
    }

    /// Data without fixed-coefficient covariates.
    pub fn without_w(y: Vec<bool>, z: Vec<Vec<T>>, v: Vec<T>) -> Result<Self> {
        let n = y.len();
        Self::new(y, z, v, vec![Vec::new(); n])
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Dimension of `eta`.
    pub fn dim(&self) -> usize {
        self.z.first().map_or(1, |r| r.len() + 1)
    }

    /// Number of fixed-coefficient covariates.
    pub fn p(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    /// Rows whose index is in `keep`, in order.
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        Self::new(
            keep.iter().map(|&i| self.y[i]).collect(),
            keep.iter().map(|&i| self.z[i].clone()).collect(),
            keep.iter().map(|&i| self.v[i]).collect(),
            keep.iter().map(|&i| self.w[i].clone()).collect(),
        )
    }

    /// Observation hyperplanes at `theta`: thresholds `v_i - w_i . theta`.
    pub fn hyperplanes(&self, theta: &[T]) -> Result<Vec<Hyperplane<T>>> {
        if theta.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: theta.len(),
            });
        }
        (0..self.len())
            .map(|i| {
                let shift = self.w[i].iter().zip(theta).fold(T::zero(), |s, (&a, &b)| s + a * b);
                Hyperplane::new(&self.z[i], self.v[i] - shift, self.y[i])
            })
            .collect()
    }
}

/// How raw covariate rows map to `(z, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    /// Rows `x = (x_0, ..., x_d)` whose last coefficient is known to be
    /// positive: each row is divided by `x_0`, giving `z = x_{1..d-1} / x_0`
    /// and `v = -x_d / x_0`. A negative `x_0` reverses the inequality, so its
    /// response is flipped.
    LastUnit,
    /// Rows `(price, z_1, ...)`: `v = price / scale`.
    Price { scale: f64 },
}

pub fn normalize<T: Scalar>(raw: &[Vec<T>], y: &[bool], convention: Normalization) -> Result<Dataset<T>> {
    if raw.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: raw.len(),
            found: y.len(),
        });
    }
    let mut zs = Vec::with_capacity(raw.len());
    let mut vs = Vec::with_capacity(raw.len());
    let mut ys = Vec::with_capacity(raw.len());
    for (i, (row, &yi)) in raw.iter().zip(y).enumerate() {
        match convention {
            Normalization::LastUnit => {
                if row.len() < 2 {
                    return Err(Error::invalid("rows need an intercept and a normalized column"));
                }
                let x0 = row[0];
                if x0 == T::zero() {
                    return Err(Error::ZeroRow { row: i });
                }
                let d = row.len() - 1;
                zs.push(row[1..d].iter().map(|&x| x / x0).collect());
                vs.push(-row[d] / x0);
                ys.push(if x0 > T::zero() { yi } else { !yi });
            }
            Normalization::Price { scale } => {
                if !(scale != 0.0 && scale.is_finite()) {
                    return Err(Error::invalid("price scale must be finite and nonzero"));
                }
                if row.is_empty() {
                    return Err(Error::invalid("rows need a price column"));
                }
                vs.push(row[0] / T::lit(scale));
                zs.push(row[1..].to_vec());
                ys.push(yi);
            }
        }
    }
    Dataset::without_w(ys, zs, vs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FittedCell<T> {
    /// An arbitrary interior point of the cell; the fit does not identify where
    /// inside the cell the mass sits.
    pub interior: Vec<T>,
    pub mass: T,
    pub eps: T,
    pub count: usize,
    pub sign: SignVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ProfilePoint<T> {
    pub theta: Vec<T>,
    pub loglik: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelFit<T> {
    pub theta: Vec<T>,
    pub loglik: T,
    pub mean_loglik: T,
    pub gap: T,
    /// Number of cells in the arrangement.
    #[serde(rename = "M")]
    pub n_cells: usize,
    pub n_maximal: usize,
    /// Cells with positive mass.
    pub cells: Vec<FittedCell<T>>,
    pub profile: Vec<ProfilePoint<T>>,
    /// Set when the profile search stopped on its evaluation budget.
    pub budget_exhausted: bool,
    /// The hyperplanes at `theta`, which define every cell above.
    pub hyperplanes: Vec<Hyperplane<T>>,
}

impl<T: Scalar> ModelFit<T> {
    pub fn dim(&self) -> usize {
        self.hyperplanes.first().map_or(1, |h| h.dim())
    }

    /// Cells with mass at least `threshold`.
    pub fn significant(&self, threshold: T) -> impl Iterator<Item = &FittedCell<T>> {
        self.cells.iter().filter(move |c| c.mass >= threshold)
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub enumerate: EnumerateOptions,
    pub solver: SolverOptions,
    /// Jitter thresholds before enumerating when `d > 2`.
    pub perturb: bool,
    /// Relative jitter magnitude.
    pub perturb_scale: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            enumerate: EnumerateOptions::default(),
            solver: SolverOptions::default(),
            perturb: true,
            perturb_scale: 1e-8,
        }
    }
}

/// Enumerates the arrangement at `theta`, keeps the locally maximal cells and
/// solves the mixture program on them.
pub fn fit_given_theta<T: Scalar>(data: &Dataset<T>, theta: &[T], opts: &FitOptions) -> Result<ModelFit<T>> {
    let mut hs = data.hyperplanes(theta)?;
    let d = data.dim();
    if d > 2 && opts.perturb {
        if d > 3 {
            warn!("d = {d}: degenerate arrangements are only resolved by random perturbation");
        }
        hs = perturb_thresholds(&hs, opts.enumerate.seed, opts.perturb_scale);
    }
    let mut arr = enumerate(&hs, &opts.enumerate)?;
    fit_arrangement(&mut arr, theta, opts)
}

/// The mixture fit on an already enumerated arrangement.
pub fn fit_arrangement<T: Scalar>(arr: &mut Arrangement<T>, theta: &[T], opts: &FitOptions) -> Result<ModelFit<T>> {
    let adj = build_adjacency(arr);
    let maximal = locally_maximal(arr, &adj);
    let a = adj.to_binary_matrix(&maximal);
    let sol = solve_with::<T>(&a, &opts.solver)?;
    let cells = maximal
        .iter()
        .zip(&sol.p)
        .filter(|(_, &m)| m > T::zero())
        .map(|(&j, &mass)| {
            let c = &arr.cells[j];
            FittedCell {
                interior: c.interior.clone(),
                mass,
                eps: c.eps,
                count: c.count,
                sign: c.sign.clone(),
            }
        })
        .collect();
    Ok(ModelFit {
        theta: theta.to_vec(),
        loglik: sol.loglik,
        mean_loglik: sol.mean_loglik,
        gap: sol.gap,
        n_cells: arr.len(),
        n_maximal: maximal.len(),
        cells,
        profile: vec![ProfilePoint {
            theta: theta.to_vec(),
            loglik: sol.loglik,
        }],
        budget_exhausted: false,
        hyperplanes: arr.hyperplanes.clone(),
    })
}

/// Compact search box for `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ThetaBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> ThetaBox<T> {
    fn clamp(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| v.max(lo).min(hi))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ProfileBudget {
    /// Grid points per coordinate.
    pub grid: usize,
    /// Evaluations allowed in the local refinement.
    pub refine: usize,
}

impl Default for ProfileBudget {
    fn default() -> Self {
        ProfileBudget { grid: 11, refine: 200 }
    }
}

/// Total order used to pick the best evaluation: higher log-likelihood, then
/// lexicographically smaller `theta`.
fn better<T: Scalar>(a: &ProfilePoint<T>, b: &ProfilePoint<T>) -> bool {
    if a.loglik != b.loglik {
        return a.loglik > b.loglik;
    }
    for (x, y) in a.theta.iter().zip(&b.theta) {
        if x != y {
            return x < y;
        }
    }
    false
}

struct Evaluator<'a, T: Scalar> {
    data: &'a Dataset<T>,
    opts: &'a FitOptions,
    log: Vec<ProfilePoint<T>>,
}

impl<T: Scalar> Evaluator<'_, T> {
    fn lookup(&self, theta: &[T]) -> Option<T> {
        self.log.iter().find(|p| p.theta == theta).map(|p| p.loglik)
    }

    fn batch(&mut self, thetas: &[Vec<T>]) -> Result<Vec<T>> {
        let fresh: Vec<&Vec<T>> = thetas.iter().filter(|t| self.lookup(t).is_none()).collect();
        let results: Result<Vec<T>> = fresh
            .par_iter()
            .map(|t| fit_given_theta(self.data, t, self.opts).map(|f| f.loglik))
            .collect();
        for (t, ll) in fresh.into_iter().zip(results?) {
            if self.lookup(t).is_none() {
                self.log.push(ProfilePoint {
                    theta: t.clone(),
                    loglik: ll,
                });
            }
        }
        Ok(thetas.iter().map(|t| self.lookup(t).unwrap()).collect())
    }
}

/// Maximizes the profile likelihood over a box: a grid search followed by a
/// Nelder-Mead refinement around the best grid point.
pub fn profile_fit<T: Scalar>(
    data: &Dataset<T>,
    domain: &ThetaBox<T>,
    budget: &ProfileBudget,
    opts: &FitOptions,
) -> Result<ModelFit<T>> {
    let p = data.p();
    if p == 0 {
        return fit_given_theta(data, &[], opts);
    }
    if domain.lower.len() != p || domain.upper.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: domain.lower.len().min(domain.upper.len()),
        });
    }
    if domain.lower.iter().zip(&domain.upper).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
        return Err(Error::invalid("theta box must have finite lower <= upper"));
    }
    let mut ev = Evaluator {
        data,
        opts,
        log: Vec::new(),
    };

    let k = budget.grid.max(1);
    let axes: Vec<Vec<T>> = (0..p)
        .map(|c| {
            let (lo, hi) = (domain.lower[c], domain.upper[c]);
            if k == 1 {
                return vec![(lo + hi) / T::lit(2.0)];
            }
            (0..k).map(|i| lo + (hi - lo) * T::lit(i as f64 / (k - 1) as f64)).collect()
        })
        .collect();
    let total = k.pow(p as u32);
    let grid: Vec<Vec<T>> = (0..total)
        .map(|mut flat| {
            let mut t = vec![T::zero(); p];
            for c in (0..p).rev() {
                t[c] = axes[c][flat % k];
                flat /= k;
            }
            t
        })
        .collect();
    ev.batch(&grid)?;

    let best_of = |log: &[ProfilePoint<T>]| {
        let mut best = &log[0];
        for pt in &log[1..] {
            if better(pt, best) {
                best = pt;
            }
        }
        best.clone()
    };
    let start = best_of(&ev.log);

    let step: Vec<T> = (0..p)
        .map(|c| {
            let w = domain.upper[c] - domain.lower[c];
            if k > 1 { w / T::lit((k - 1) as f64) } else { w / T::lit(2.0) }
        })
        .collect();
    let exhausted = nelder_mead(&mut ev, domain, &start.theta, &step, budget.refine)?;

    let best = best_of(&ev.log);
    let mut fit = fit_given_theta(data, &best.theta, opts)?;
    fit.profile = ev.log;
    fit.budget_exhausted = exhausted;
    Ok(fit)
}

/// Maximizes over the box by Nelder-Mead; returns whether the budget ran out
/// before the simplex collapsed.
fn nelder_mead<T: Scalar>(
    ev: &mut Evaluator<'_, T>,
    domain: &ThetaBox<T>,
    start: &[T],
    step: &[T],
    budget: usize,
) -> Result<bool> {
    let p = start.len();
    let used_before = ev.log.len();
    let used = |ev: &Evaluator<'_, T>| ev.log.len() - used_before;
    let size_tol = step.iter().fold(T::zero(), |m, &s| m.max(s)) * T::lit(1e-3);

    let mut simplex: Vec<Vec<T>> = vec![start.to_vec()];
    for c in 0..p {
        let mut v = start.to_vec();
        v[c] = if v[c] + step[c] <= domain.upper[c] { v[c] + step[c] } else { v[c] - step[c] };
        simplex.push(domain.clamp(&v));
    }
    let mut vals = ev.batch(&simplex)?;

    let half = T::lit(0.5);
    let two = T::lit(2.0);
    loop {
        // Sort descending: best first.
        let mut order: Vec<usize> = (0..=p).collect();
        order.sort_by(|&a, &b| {
            let pa = ProfilePoint { theta: simplex[a].clone(), loglik: vals[a] };
            let pb = ProfilePoint { theta: simplex[b].clone(), loglik: vals[b] };
            if better(&pa, &pb) {
                std::cmp::Ordering::Less
            } else if better(&pb, &pa) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let size = simplex[1..].iter().fold(T::zero(), |m, v| {
            v.iter().zip(&simplex[0]).fold(m, |m, (&a, &b)| m.max((a - b).abs()))
        });
        if size <= size_tol {
            return Ok(false);
        }
        if used(ev) >= budget {
            return Ok(true);
        }

        let centroid: Vec<T> = (0..p)
            .map(|c| simplex[..p].iter().map(|v| v[c]).sum::<T>() / T::lit(p as f64))
            .collect();
        let along = |t: T| -> Vec<T> {
            let raw: Vec<T> = (0..p).map(|c| centroid[c] + t * (simplex[p][c] - centroid[c])).collect();
            domain.clamp(&raw)
        };
        let xr = along(-T::one());
        let fr = ev.batch(std::slice::from_ref(&xr))?[0];
        if fr > vals[0] {
            let xe = along(-two);
            let fe = ev.batch(std::slice::from_ref(&xe))?[0];
            if fe > fr {
                simplex[p] = xe;
                vals[p] = fe;
            } else {
                simplex[p] = xr;
                vals[p] = fr;
            }
        } else if fr > vals[p - 1] {
            simplex[p] = xr;
            vals[p] = fr;
        } else {
            let xc = if fr > vals[p] { along(-half) } else { along(half) };
            let fc = ev.batch(std::slice::from_ref(&xc))?[0];
            if fc > vals[p].max(fr) {
                simplex[p] = xc;
                vals[p] = fc;
            } else {
                // Shrink towards the best vertex.
                let best = simplex[0].clone();
                let shrunk: Vec<Vec<T>> = simplex[1..]
                    .iter()
                    .map(|v| v.iter().zip(&best).map(|(&a, &b)| b + half * (a - b)).collect())
                    .collect();
                let fs = ev.batch(&shrunk)?;
                for (k, (v, f)) in shrunk.into_iter().zip(fs).enumerate() {
                    simplex[k + 1] = v;
                    vals[k + 1] = f;
                }
            }
        }
    }
}
