//! Exhaustive enumeration over all `2^n` sign patterns. Only usable for
//! small `n`; kept as an independent oracle for the incremental algorithms.

use rayon::prelude::*;

use super::{slack_problem, validate, Arrangement, Cell, EnumerationStats, Hyperplane, Method};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sign::SignVector;

pub const BRUTE_FORCE_MAX: usize = 20;

pub fn enumerate_bruteforce<T: Scalar>(hyperplanes: &[Hyperplane<T>]) -> Result<Arrangement<T>> {
    let dim = validate(hyperplanes)?;
    let n = hyperplanes.len();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::TooLarge {
            n,
            max: BRUTE_FORCE_MAX,
        });
    }
    let cells: Vec<Cell<T>> = (0..1u32 << n)
        .into_par_iter()
        .filter_map(|mask| {
            let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let sign = SignVector::from_bools(&bits);
            let sol = slack_problem(&sign, hyperplanes).solve();
            (sol.slack > T::interior_tol()).then_some(Cell {
                sign,
                interior: sol.point,
                eps: sol.slack,
                count: 0,
            })
        })
        .collect();
    Ok(Arrangement {
        dim,
        hyperplanes: hyperplanes.to_vec(),
        cells,
        method: Method::BruteForce,
        stats: EnumerationStats {
            lps_per_iteration: vec![1 << n],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_two_cells() {
        let hs = [Hyperplane::new(&[0.5], 0.2, true).unwrap()];
        assert_eq!(enumerate_bruteforce(&hs).unwrap().len(), 2);
    }

    #[test]
    fn two_crossing_lines_four_cells() {
        let hs = [
            Hyperplane::new(&[-1.0], -1.0, true).unwrap(),
            Hyperplane::new(&[1.0], 1.0, true).unwrap(),
        ];
        assert_eq!(enumerate_bruteforce(&hs).unwrap().len(), 4);
    }

    #[test]
    fn refuses_large_inputs() {
        let hs: Vec<_> = (0..21)
            .map(|i| Hyperplane::new(&[i as f64], 0.0, true).unwrap())
            .collect();
        assert!(matches!(enumerate_bruteforce(&hs), Err(Error::TooLarge { .. })));
    }
}
