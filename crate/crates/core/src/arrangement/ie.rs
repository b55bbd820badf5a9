//! Incremental enumeration: insert hyperplanes one at a time and, for every
//! existing cell, test whether the new hyperplane splits it.

use super::{extend_cells, initial_cells, split_candidates, starting_point, validate};
use super::{Arrangement, EnumerateOptions, EnumerationStats, Hyperplane, Method};
use crate::error::Result;
use crate::scalar::Scalar;

pub fn enumerate_ie<T: Scalar>(hyperplanes: &[Hyperplane<T>], opts: &EnumerateOptions) -> Result<Arrangement<T>> {
    let dim = validate(hyperplanes)?;
    let eta = starting_point(hyperplanes, dim, opts.seed);
    let (mut cells, first_lps) = initial_cells(hyperplanes, eta);
    let mut stats = EnumerationStats {
        lps_per_iteration: vec![first_lps],
    };
    for k in 1..hyperplanes.len() {
        let (handled, refresh_lps) = extend_cells(&mut cells, hyperplanes, k, opts.parallel);
        let candidates: Vec<usize> = (0..handled.len()).filter(|&j| !handled[j]).collect();
        let split_lps = split_candidates(&mut cells, hyperplanes, k, &candidates, opts.parallel);
        stats.lps_per_iteration.push(refresh_lps + split_lps);
    }
    Ok(Arrangement {
        dim,
        hyperplanes: hyperplanes.to_vec(),
        cells,
        method: Method::Incremental,
        stats,
    })
}
