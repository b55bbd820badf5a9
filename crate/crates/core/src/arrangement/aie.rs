//! Accelerated incremental enumeration for line arrangements.
//!
//! When line `H_k` is inserted only the cells it crosses can split, and by
//! the zone theorem there are at most `k` of them. They are found without any
//! LP: every crossed cell is incident to a vertex `H_k ∩ H_j`, and the cells
//! incident to a vertex are exactly the existing sign vectors that agree with
//! the vertex's sign pattern off its zero entries.
//!
//! Degenerate inputs are handled as follows:
//! * a line equal to an earlier one creates no cells and is skipped;
//! * parallel lines simply contribute no vertex (a line parallel to every
//!   earlier line lies in a single cell, found by locating one of its points);
//! * a vertex shared by several earlier lines has several zero entries, which
//!   are expanded over all sign combinations and filtered against the
//!   existing cells.

use std::collections::BTreeSet;

use super::index::{SignIndex, Zobrist};
use super::{extend_cells, initial_cells, split_candidates, starting_point, validate};
use super::{Arrangement, Cell, EnumerateOptions, EnumerationStats, Hyperplane, Method};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sign::SignVector;

/// Above this many concurrent lines at one vertex, matching cells are found by
/// scanning instead of expanding `2^a` patterns.
const MAX_EXPANSION: usize = 16;

pub fn enumerate_aie<T: Scalar>(hyperplanes: &[Hyperplane<T>], opts: &EnumerateOptions) -> Result<Arrangement<T>> {
    let dim = validate(hyperplanes)?;
    if dim != 2 {
        return Err(Error::invalid(format!(
            "accelerated enumeration requires d = 2, got d = {dim}"
        )));
    }
    let zobrist = Zobrist::new(hyperplanes.len());
    let eta = starting_point(hyperplanes, dim, opts.seed);
    let (mut cells, first_lps) = initial_cells(hyperplanes, eta);
    let mut hashes: Vec<u64> = cells.iter().map(|c| zobrist.hash(&c.sign)).collect();
    let mut stats = EnumerationStats {
        lps_per_iteration: vec![first_lps],
    };

    for k in 1..hyperplanes.len() {
        let h = &hyperplanes[k];
        if let Some(j) = (0..k).find(|&j| hyperplanes[j].coincides(h)) {
            for (c, h) in cells.iter_mut().zip(&mut hashes) {
                let side = c.sign.get(j);
                c.sign.push(side);
                if side {
                    *h ^= zobrist.key(k);
                }
            }
            stats.lps_per_iteration.push(0);
            continue;
        }

        let zone = zone_cells(&cells, &hashes, hyperplanes, k, &zobrist);
        let before = cells.len();
        let (handled, refresh_lps) = extend_cells(&mut cells, hyperplanes, k, opts.parallel);
        let candidates: Vec<usize> = zone.into_iter().filter(|&j| !handled[j]).collect();
        let split_lps = split_candidates(&mut cells, hyperplanes, k, &candidates, opts.parallel);
        stats.lps_per_iteration.push(refresh_lps + split_lps);

        // Existing cells keep their first k entries, so only entry k changes the hash.
        for (c, h) in cells[..before].iter().zip(&mut hashes) {
            if c.sign.get(k) {
                *h ^= zobrist.key(k);
            }
        }
        hashes.extend(cells[before..].iter().map(|c| zobrist.hash(&c.sign)));
    }

    Ok(Arrangement {
        dim,
        hyperplanes: hyperplanes.to_vec(),
        cells,
        method: Method::Accelerated,
        stats,
    })
}

/// Intersection of two lines, `None` when (numerically) parallel.
pub(crate) fn vertex<T: Scalar>(g: &Hyperplane<T>, h: &Hyperplane<T>) -> Option<[T; 2]> {
    let (a, b) = (g.normal(), h.normal());
    let det = a[0] * b[1] - a[1] * b[0];
    if det.abs() < T::lit(1e-12) * g.norm() * h.norm() {
        return None;
    }
    let (gv, hv) = (g.threshold(), h.threshold());
    Some([(gv * b[1] - a[1] * hv) / det, (a[0] * hv - gv * b[0]) / det])
}

/// Indices of the cells (over the first `k` lines) incident to line `k`.
fn zone_cells<T: Scalar>(
    cells: &[Cell<T>],
    hashes: &[u64],
    hs: &[Hyperplane<T>],
    k: usize,
    zobrist: &Zobrist,
) -> BTreeSet<usize> {
    let index = SignIndex::with_hashes(cells.iter().map(|c| &c.sign).collect(), hashes.to_vec(), zobrist);
    let h = &hs[k];
    let mut zone = BTreeSet::new();
    let mut any_vertex = false;
    for j in 0..k {
        if let Some(t) = vertex(&hs[j], h) {
            any_vertex = true;
            cells_around(&t, Some(j), cells, &hs[..k], &index, &mut zone);
        }
    }
    if !any_vertex {
        // Parallel to everything before it: the whole line sits in one cell.
        let a = h.normal();
        let s = h.threshold() / (a[0] * a[0] + a[1] * a[1]);
        cells_around(&[a[0] * s, a[1] * s], None, cells, &hs[..k], &index, &mut zone);
    }
    zone
}

fn cells_around<T: Scalar>(
    t: &[T; 2],
    on: Option<usize>,
    cells: &[Cell<T>],
    hs: &[Hyperplane<T>],
    index: &SignIndex<'_>,
    zone: &mut BTreeSet<usize>,
) {
    let tnorm = (t[0] * t[0] + t[1] * t[1]).sqrt();
    let mut base = SignVector::with_capacity(hs.len());
    let mut zeros = Vec::new();
    for (i, g) in hs.iter().enumerate() {
        let r = g.value(t);
        let tol = T::interior_tol() * (T::one() + g.threshold().abs() + g.norm() * tnorm);
        if Some(i) == on || r.abs() <= tol {
            zeros.push(i);
            base.push(false);
        } else {
            base.push(r > T::zero());
        }
    }

    if zeros.len() <= MAX_EXPANSION {
        for mask in 0u32..1 << zeros.len() {
            let mut s = base.clone();
            for (b, &i) in zeros.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    s.set(i, true);
                }
            }
            if let Some(j) = index.get(&s) {
                zone.insert(j);
            }
        }
    } else {
        let mut fixed = vec![true; hs.len()];
        for &i in &zeros {
            fixed[i] = false;
        }
        for (j, c) in cells.iter().enumerate() {
            if (0..hs.len()).all(|i| !fixed[i] || c.sign.get(i) == base.get(i)) {
                zone.insert(j);
            }
        }
    }
}
