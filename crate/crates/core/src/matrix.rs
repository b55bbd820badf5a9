//! Binary matrices stored by column.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Columns switch to bitsets above this fill ratio.
const DENSE_FILL: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
enum Column {
    Sparse(Vec<u32>),
    Dense(Vec<u64>),
}

/// An `n x M` 0/1 matrix. Each column is a sorted row list, or a bitset when
/// more than a quarter of its entries are ones.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: Vec<Column>,
    counts: Vec<usize>,
}

impl BinaryMatrix {
    /// Builds from per-column lists of row indices holding a one.
    pub fn from_columns(rows: usize, columns: Vec<Vec<usize>>) -> Result<Self> {
        let mut cols = Vec::with_capacity(columns.len());
        let mut counts = Vec::with_capacity(columns.len());
        for mut c in columns {
            c.sort_unstable();
            c.dedup();
            if let Some(&last) = c.last() {
                if last >= rows {
                    return Err(Error::DimensionMismatch {
                        expected: rows,
                        found: last + 1,
                    });
                }
            }
            counts.push(c.len());
            cols.push(pack(rows, &c));
        }
        Ok(BinaryMatrix { rows, cols, counts })
    }

    /// Builds from a row-major matrix whose entries must all be 0 or 1.
    pub fn from_dense<T: Scalar>(entries: &[Vec<T>]) -> Result<Self> {
        let rows = entries.len();
        let m = entries.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::new(); m];
        for (i, row) in entries.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                if x == T::one() {
                    columns[j].push(i);
                } else if x != T::zero() {
                    return Err(Error::NonBinary { row: i, col: j });
                }
            }
        }
        Self::from_columns(rows, columns)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols.len()
    }

    pub fn column_count(&self, j: usize) -> usize {
        self.counts[j]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        match &self.cols[j] {
            Column::Sparse(c) => c.binary_search(&(i as u32)).is_ok(),
            Column::Dense(w) => w[i / 64] >> (i % 64) & 1 == 1,
        }
    }

    /// Row indices of the ones in column `j`, ascending.
    pub fn column(&self, j: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.counts[j]);
        self.for_each_in(j, |i| out.push(i));
        out
    }

    #[inline]
    fn for_each_in(&self, j: usize, mut f: impl FnMut(usize)) {
        match &self.cols[j] {
            Column::Sparse(c) => c.iter().for_each(|&i| f(i as usize)),
            Column::Dense(words) => {
                for (k, &w) in words.iter().enumerate() {
                    let mut w = w;
                    while w != 0 {
                        f(k * 64 + w.trailing_zeros() as usize);
                        w &= w - 1;
                    }
                }
            }
        }
    }

    /// `sum_i a_ij x_i`.
    #[inline]
    pub fn column_dot<T: Scalar>(&self, j: usize, x: &[T]) -> T {
        let mut s = T::zero();
        self.for_each_in(j, |i| s += x[i]);
        s
    }

    /// `A^T x`, one column per task; each entry is summed in row order.
    pub fn transpose_mul<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        (0..self.cols()).into_par_iter().map(|j| self.column_dot(j, x)).collect()
    }

    /// `A p`, accumulated column by column in index order.
    pub fn mul<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.rows];
        for (j, &pj) in p.iter().enumerate() {
            if pj != T::zero() {
                self.for_each_in(j, |i| g[i] += pj);
            }
        }
        g
    }

    /// First row with no ones, if any.
    pub fn empty_row(&self) -> Option<usize> {
        let mut hit = vec![false; self.rows];
        for j in 0..self.cols() {
            self.for_each_in(j, |i| hit[i] = true);
        }
        hit.iter().position(|&h| !h)
    }

    pub fn select_columns(&self, cols: &[usize]) -> BinaryMatrix {
        BinaryMatrix {
            rows: self.rows,
            cols: cols.iter().map(|&j| self.cols[j].clone()).collect(),
            counts: cols.iter().map(|&j| self.counts[j]).collect(),
        }
    }
}

fn pack(rows: usize, c: &[usize]) -> Column {
    if rows > 0 && c.len() as f64 > DENSE_FILL * rows as f64 {
        let mut words = vec![0u64; rows.div_ceil(64)];
        for &i in c {
            words[i / 64] |= 1 << (i % 64);
        }
        Column::Dense(words)
    } else {
        Column::Sparse(c.iter().map(|&i| i as u32).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_binary() {
        let e = BinaryMatrix::from_dense(&[vec![1.0, 0.5]]).unwrap_err();
        assert!(matches!(e, Error::NonBinary { row: 0, col: 1 }));
    }

    #[test]
    fn finds_empty_row() {
        let a = BinaryMatrix::from_columns(3, vec![vec![0], vec![2, 0]]).unwrap();
        assert_eq!(a.empty_row(), Some(1));
        assert!(BinaryMatrix::from_columns(2, vec![vec![2]]).is_err());
    }

    proptest! {
        #[test]
        fn products_match_dense(
            bits in prop::collection::vec(prop::collection::vec(any::<bool>(), 7), 1..90),
            seed in 0u64..1000,
        ) {
            let rows = bits.len();
            let dense: Vec<Vec<f64>> = bits.iter().map(|r| r.iter().map(|&b| b as u8 as f64).collect()).collect();
            let a = BinaryMatrix::from_dense(&dense).unwrap();
            let x: Vec<f64> = (0..rows).map(|i| ((i as u64 * 31 + seed) % 17) as f64).collect();
            let p: Vec<f64> = (0..7).map(|j| (j as f64 + 1.0) / 28.0).collect();
            let at = a.transpose_mul(&x);
            let ap = a.mul(&p);
            for j in 0..7 {
                let want: f64 = (0..rows).map(|i| dense[i][j] * x[i]).sum();
                prop_assert_eq!(at[j], want);
                prop_assert_eq!(a.column_count(j), (0..rows).filter(|&i| bits[i][j]).count());
            }
            for i in 0..rows {
                let want: f64 = (0..7).map(|j| dense[i][j] * p[j]).sum();
                prop_assert!((ap[i] - want).abs() < 1e-12);
                for j in 0..7 {
                    prop_assert_eq!(a.get(i, j), bits[i][j]);
                }
            }
        }
    }
}
