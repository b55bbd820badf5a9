//! Cell enumeration for the hyperplane arrangement induced by a binary
//! response sample, and the likelihood adjacency structure built on it.
//!
//! Each observation contributes the hyperplane `{eta : Z_i . eta = v_i}` with
//! `Z_i = (1, z_i)`; the full-dimensional cells of the arrangement are the
//! only objects the likelihood can distinguish.

mod adjacency;
mod aie;
mod brute;
mod ie;
mod index;

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::SlackProblem;
use crate::scalar::{dot, Scalar};
use crate::sign::SignVector;

pub use adjacency::{build_adjacency, locally_maximal, max_score_cells, AdjacencyMatrix};
pub use aie::enumerate_aie;
pub use brute::{enumerate_bruteforce, BRUTE_FORCE_MAX};
pub use ie::enumerate_ie;

/// One observation's hyperplane `Z . eta = v` together with its response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Hyperplane<T> {
    normal: Vec<T>,
    threshold: T,
    y: bool,
}

impl<T: Scalar> Hyperplane<T> {
    /// Builds `Z = (1, z)`; the arrangement lives in `R^{1 + z.len()}`.
    pub fn new(z: &[T], v: T, y: bool) -> Result<Self> {
        if !v.is_finite() || z.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("hyperplane"));
        }
        let mut normal = Vec::with_capacity(z.len() + 1);
        normal.push(T::one());
        normal.extend_from_slice(z);
        Ok(Hyperplane {
            normal,
            threshold: v,
            y,
        })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `Z` with leading entry 1.
    pub fn normal(&self) -> &[T] {
        &self.normal
    }

    pub fn covariates(&self) -> &[T] {
        &self.normal[1..]
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }

    pub fn y(&self) -> bool {
        self.y
    }

    pub fn with_threshold(&self, v: T) -> Self {
        Hyperplane {
            threshold: v,
            ..self.clone()
        }
    }

    pub fn with_y(&self, y: bool) -> Self {
        Hyperplane { y, ..self.clone() }
    }

    /// Signed residual `Z . eta - v`.
    #[inline]
    pub fn value(&self, eta: &[T]) -> T {
        dot(&self.normal, eta) - self.threshold
    }

    /// Same line, exactly.
    pub fn coincides(&self, other: &Self) -> bool {
        self.threshold == other.threshold && self.normal == other.normal
    }

    pub(crate) fn norm(&self) -> T {
        dot(&self.normal, &self.normal).sqrt()
    }
}

/// A full-dimensional cell of the arrangement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Cell<T> {
    pub sign: SignVector,
    /// A strict interior point.
    pub interior: Vec<T>,
    /// Slack certificate: every constraint holds at `interior` with at least this margin.
    pub eps: T,
    /// Number of observations whose response is compatible with the cell; zero until
    /// [`build_adjacency`] runs.
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Incremental,
    Accelerated,
    BruteForce,
    Sweep,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    /// LPs solved while inserting each hyperplane, in insertion order.
    pub lps_per_iteration: Vec<usize>,
}

impl EnumerationStats {
    pub fn total_lps(&self) -> usize {
        self.lps_per_iteration.iter().sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Arrangement<T> {
    pub dim: usize,
    pub hyperplanes: Vec<Hyperplane<T>>,
    pub cells: Vec<Cell<T>>,
    pub method: Method,
    pub stats: EnumerationStats,
}

impl<T: Scalar> Arrangement<T> {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Sign vector of a point, or `None` when it lies within `tol` of some hyperplane.
    pub fn sign_of(&self, point: &[T], tol: T) -> Option<SignVector> {
        sign_of(&self.hyperplanes, point, tol)
    }

    /// Index of the cell containing `point`.
    pub fn locate(&self, point: &[T]) -> Option<usize> {
        let s = self.sign_of(point, T::zero())?;
        self.cells.iter().position(|c| c.sign == s)
    }

    pub fn sign_set(&self) -> std::collections::BTreeSet<SignVector> {
        self.cells.iter().map(|c| c.sign.clone()).collect()
    }

    pub fn index_of(&self) -> HashMap<SignVector, usize> {
        self.cells
            .iter()
            .enumerate()
            .map(|(j, c)| (c.sign.clone(), j))
            .collect()
    }

    /// Debug dump: `cell_id,eps,eta1..etad,count,sign`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["cell_id".to_string(), "eps".to_string()];
        header.extend((1..=self.dim).map(|k| format!("eta{k}")));
        header.push("count".into());
        header.push("sign".into());
        out.write_record(&header)?;
        for (j, c) in self.cells.iter().enumerate() {
            let mut rec = vec![j.to_string(), c.eps.to_string()];
            rec.extend(c.interior.iter().map(|x| x.to_string()));
            rec.push(c.count.to_string());
            rec.push(c.sign.to_hex());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EnumerateOptions {
    /// Seed for the starting point.
    pub seed: u64,
    /// Solve the candidate LPs of one insertion step on the rayon pool.
    pub parallel: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            seed: 0x5eed,
            parallel: true,
        }
    }
}

pub(crate) fn sign_of<T: Scalar>(hs: &[Hyperplane<T>], point: &[T], tol: T) -> Option<SignVector> {
    let mut s = SignVector::with_capacity(hs.len());
    for h in hs {
        let r = h.value(point);
        if r.abs() <= tol {
            return None;
        }
        s.push(r > T::zero());
    }
    Some(s)
}

/// Builds the max-slack LP for a sign pattern against the first `signs.len()` hyperplanes.
pub(crate) fn slack_problem<T: Scalar>(signs: &SignVector, hs: &[Hyperplane<T>]) -> SlackProblem<T> {
    let dim = hs.first().map_or(1, |h| h.dim());
    let mut p = SlackProblem::with_capacity(dim, T::one(), signs.len());
    for (i, h) in hs.iter().take(signs.len()).enumerate() {
        p.push(h.normal(), h.threshold(), signs.get(i));
    }
    p
}

/// Solves `max { eps | S (Z eta - v) >= eps 1, 0 <= eps <= 1 }`.
///
/// Returns the maximizer and `eps`; `eps == 0` means the sign pattern does not
/// describe a nonempty open cell (callers compare against
/// [`Scalar::interior_tol`]).
pub fn interior_point<T: Scalar>(
    signs: &SignVector,
    hyperplanes: &[Hyperplane<T>],
    dim: usize,
) -> Result<(Vec<T>, T)> {
    if signs.len() != hyperplanes.len() {
        return Err(Error::DimensionMismatch {
            expected: hyperplanes.len(),
            found: signs.len(),
        });
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    for h in hyperplanes {
        if h.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: h.dim(),
            });
        }
        if !h.threshold.is_finite() || h.normal.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("hyperplane"));
        }
    }
    let mut p = SlackProblem::with_capacity(dim, T::one(), hyperplanes.len());
    for (i, h) in hyperplanes.iter().enumerate() {
        p.push(h.normal(), h.threshold(), signs.get(i));
    }
    let sol = p.solve();
    Ok((sol.point, sol.slack.max(T::zero())))
}

pub(crate) fn validate<T: Scalar>(hs: &[Hyperplane<T>]) -> Result<usize> {
    let Some(first) = hs.first() else {
        return Err(Error::invalid("at least one hyperplane is required"));
    };
    let dim = first.dim();
    for h in hs {
        if h.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: h.dim(),
            });
        }
        if h.normal[0] != T::one() {
            return Err(Error::invalid("hyperplane normal must start with 1"));
        }
        if !h.threshold.is_finite() || h.normal.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("hyperplane"));
        }
    }
    Ok(dim)
}

/// Gaussian starting point that avoids every hyperplane.
pub(crate) fn starting_point<T: Scalar>(hs: &[Hyperplane<T>], dim: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let eta: Vec<T> = (0..dim)
            .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let clear = hs
            .iter()
            .all(|h| h.value(&eta).abs() > T::interior_tol() * (T::one() + h.norm()));
        if clear {
            return eta;
        }
    }
}

/// Both cells of a single hyperplane, starting from `eta`.
pub(crate) fn initial_cells<T: Scalar>(hs: &[Hyperplane<T>], eta: Vec<T>) -> (Vec<Cell<T>>, usize) {
    let h = &hs[0];
    let r = h.value(&eta);
    let first = Cell {
        sign: SignVector::from_bools(&[r > T::zero()]),
        eps: r.abs().min(T::one()),
        interior: eta,
        count: 0,
    };
    let other = SignVector::from_bools(&[r <= T::zero()]);
    let sol = slack_problem(&other, &hs[..1]).solve();
    let mut cells = vec![first];
    if sol.slack > T::interior_tol() {
        cells.push(Cell {
            sign: other,
            interior: sol.point,
            eps: sol.slack,
            count: 0,
        });
    }
    (cells, 1)
}

/// Step (a) of an insertion: extends each cell by its side of hyperplane `k`.
///
/// Cells whose stored interior point sits within tolerance of the new
/// hyperplane are re-solved on both sides; their indices are returned so the
/// caller does not split them again.
pub(crate) fn extend_cells<T: Scalar>(
    cells: &mut Vec<Cell<T>>,
    hs: &[Hyperplane<T>],
    k: usize,
    parallel: bool,
) -> (Vec<bool>, usize) {
    let h = &hs[k];
    let tol = T::interior_tol();
    let mut near = Vec::new();
    for (j, c) in cells.iter_mut().enumerate() {
        let r = h.value(&c.interior);
        if r.abs() > tol {
            c.sign.push(r > T::zero());
            c.eps = c.eps.min(r.abs());
        } else {
            near.push(j);
        }
    }
    let mut handled = vec![false; cells.len()];
    if near.is_empty() {
        return (handled, 0);
    }

    let solve_side = |j: usize, side: bool| {
        let s = cells[j].sign.with_pushed(side);
        let sol = slack_problem(&s, &hs[..=k]).solve_from(&cells[j].interior);
        (s, sol)
    };
    let jobs: Vec<(usize, bool)> = near.iter().flat_map(|&j| [(j, true), (j, false)]).collect();
    let solved: Vec<_> = if parallel {
        jobs.par_iter().map(|&(j, side)| solve_side(j, side)).collect()
    } else {
        jobs.iter().map(|&(j, side)| solve_side(j, side)).collect()
    };
    let lps = solved.len();

    let mut appended = Vec::new();
    for (pair, &j) in solved.chunks(2).zip(&near) {
        let mut kept = pair
            .iter()
            .filter(|(_, sol)| sol.slack > tol)
            .map(|(s, sol)| Cell {
                sign: s.clone(),
                interior: sol.point.clone(),
                eps: sol.slack.min(T::one()),
                count: 0,
            });
        // The point lies inside the old cell, so at least one side is nonempty in
        // exact arithmetic; fall back to the better side if round-off says otherwise.
        let first = kept.next().unwrap_or_else(|| {
            let (s, sol) = if pair[0].1.slack >= pair[1].1.slack { &pair[0] } else { &pair[1] };
            Cell {
                sign: s.clone(),
                interior: sol.point.clone(),
                eps: sol.slack.max(T::zero()),
                count: 0,
            }
        });
        cells[j] = first;
        handled[j] = true;
        appended.extend(kept);
    }
    for c in appended {
        cells.push(c);
        handled.push(true);
    }
    (handled, lps)
}

/// Step (b): for each candidate, try the opposite side of the newest hyperplane.
pub(crate) fn split_candidates<T: Scalar>(
    cells: &mut Vec<Cell<T>>,
    hs: &[Hyperplane<T>],
    k: usize,
    candidates: &[usize],
    parallel: bool,
) -> usize {
    let try_split = |j: usize| {
        let s = cells[j].sign.flipped(k);
        let sol = slack_problem(&s, &hs[..=k]).solve_from(&cells[j].interior);
        (sol.slack > T::interior_tol()).then(|| Cell {
            sign: s,
            interior: sol.point,
            eps: sol.slack.min(T::one()),
            count: 0,
        })
    };
    let found: Vec<Option<Cell<T>>> = if parallel {
        candidates.par_iter().map(|&j| try_split(j)).collect()
    } else {
        candidates.iter().map(|&j| try_split(j)).collect()
    };
    cells.extend(found.into_iter().flatten());
    candidates.len()
}

/// Exact enumeration for `d = 1`: the cells are the open intervals between
/// consecutive distinct thresholds.
pub fn enumerate_sweep<T: Scalar>(hyperplanes: &[Hyperplane<T>]) -> Result<Arrangement<T>> {
    let dim = validate(hyperplanes)?;
    if dim != 1 {
        return Err(Error::invalid("sweep enumeration requires d = 1"));
    }
    let mut cuts: Vec<T> = hyperplanes.iter().map(|h| h.threshold()).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let tol = T::interior_tol();
    let mut points = Vec::with_capacity(cuts.len() + 1);
    points.push((cuts[0] - T::one(), T::one()));
    for w in cuts.windows(2) {
        let half = (w[1] - w[0]) / T::lit(2.0);
        if half > tol {
            points.push((w[0] + half, half.min(T::one())));
        }
    }
    points.push((cuts[cuts.len() - 1] + T::one(), T::one()));
    let cells = points
        .into_iter()
        .map(|(x, eps)| Cell {
            sign: SignVector::from_bools(
                &hyperplanes.iter().map(|h| x > h.threshold()).collect::<Vec<_>>(),
            ),
            interior: vec![x],
            eps,
            count: 0,
        })
        .collect();
    Ok(Arrangement {
        dim,
        hyperplanes: hyperplanes.to_vec(),
        cells,
        method: Method::Sweep,
        stats: EnumerationStats::default(),
    })
}

/// Picks the enumerator suited to the dimension: sweep for `d = 1`, the
/// accelerated incremental algorithm for `d = 2`, plain incremental otherwise.
pub fn enumerate<T: Scalar>(hyperplanes: &[Hyperplane<T>], opts: &EnumerateOptions) -> Result<Arrangement<T>> {
    match validate(hyperplanes)? {
        1 => enumerate_sweep(hyperplanes),
        2 => enumerate_aie(hyperplanes, opts),
        _ => enumerate_ie(hyperplanes, opts),
    }
}

/// Jitters every threshold by a seeded uniform draw of magnitude
/// `rel * max(1, max |v|)`, breaking degeneracies that the `d > 2`
/// enumerator does not resolve exactly.
pub fn perturb_thresholds<T: Scalar>(hyperplanes: &[Hyperplane<T>], seed: u64, rel: f64) -> Vec<Hyperplane<T>> {
    let scale = hyperplanes
        .iter()
        .fold(1.0f64, |m, h| m.max(h.threshold().as_f64().abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    hyperplanes
        .iter()
        .map(|h| {
            let u: f64 = rng.random_range(-1.0..1.0);
            h.with_threshold(h.threshold() + T::lit(u * rel * scale))
        })
        .collect()
}

/// Sum of binomial coefficients `C(n, 0) + ... + C(n, d)`: the cell count of
/// `n` hyperplanes in general position in `R^d`.
pub fn general_position_cells(n: usize, d: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for i in 0..=d.min(n) {
        total += binom;
        binom = binom * (n - i) as u128 / (i + 1) as u128;
    }
    total
}
