use serde::{Deserialize, Serialize};

use super::index::{SignIndex, Zobrist};
use super::Arrangement;
use crate::matrix::BinaryMatrix;
use crate::scalar::Scalar;
use crate::sign::SignVector;

/// The `n x M` matrix with `a_ij = 1` iff cell `j` lies on the side of
/// hyperplane `i` that agrees with response `y_i`.
///
/// Stored by column: column `j` is the modified sign vector of cell `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    n: usize,
    columns: Vec<SignVector>,
    column_counts: Vec<usize>,
}

impl AdjacencyMatrix {
    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.columns[j].get(i)
    }

    pub fn column(&self, j: usize) -> &SignVector {
        &self.columns[j]
    }

    pub fn column_counts(&self) -> &[usize] {
        &self.column_counts
    }

    /// The submatrix on `cols`, in the given order.
    pub fn to_binary_matrix(&self, cols: &[usize]) -> BinaryMatrix {
        let lists = cols.iter().map(|&j| self.columns[j].ones().collect()).collect();
        BinaryMatrix::from_columns(self.n, lists).expect("column indices are below n by construction")
    }

    pub fn to_binary_matrix_full(&self) -> BinaryMatrix {
        self.to_binary_matrix(&(0..self.cols()).collect::<Vec<_>>())
    }
}

/// Builds the adjacency matrix and stores each column count on its cell.
pub fn build_adjacency<T: Scalar>(arr: &mut Arrangement<T>) -> AdjacencyMatrix {
    let n = arr.hyperplanes.len();
    let zeros: Vec<bool> = arr.hyperplanes.iter().map(|h| !h.y()).collect();
    let flip = SignVector::from_bools(&zeros);
    let mut columns = Vec::with_capacity(arr.cells.len());
    let mut column_counts = Vec::with_capacity(arr.cells.len());
    for cell in &mut arr.cells {
        let col = cell.sign.xor(&flip);
        cell.count = col.count_positive();
        column_counts.push(cell.count);
        columns.push(col);
    }
    AdjacencyMatrix {
        n,
        columns,
        column_counts,
    }
}

/// Cells that no Hamming-1 neighbour in the arrangement beats on count.
///
/// Flipping sign `i` changes the count by exactly one, upward iff `a_ij = 0`,
/// so a cell is dominated iff one of its zero entries leads to an existing cell.
/// Ties never disqualify.
pub fn locally_maximal<T: Scalar>(arr: &Arrangement<T>, adj: &AdjacencyMatrix) -> Vec<usize> {
    let n = arr.hyperplanes.len();
    let zobrist = Zobrist::new(n);
    let index = SignIndex::new(arr.cells.iter().map(|c| &c.sign), &zobrist);
    (0..arr.cells.len())
        .filter(|&j| {
            let col = &adj.columns[j];
            (0..n).all(|i| col.get(i) || index.neighbour(j, i).is_none())
        })
        .collect()
}

/// Cells attaining the largest count: the argmax set of the maximum-score objective.
pub fn max_score_cells(adj: &AdjacencyMatrix) -> Vec<usize> {
    let Some(&best) = adj.column_counts.iter().max() else {
        return Vec::new();
    };
    (0..adj.cols()).filter(|&j| adj.column_counts[j] == best).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::{enumerate_ie, EnumerateOptions, Hyperplane};

    // Five-observation example in the lower-halfspace orientation, mapped by v -> -v.
    fn toy() -> Vec<Hyperplane<f64>> {
        [(0.41, 1.22, true), (0.40, 0.36, false), (0.17, 0.24, true), (-0.79, 0.99, false), (-0.94, 0.55, false)]
            .iter()
            .map(|&(z, v, y)| Hyperplane::new(&[z], -v, y).unwrap())
            .collect()
    }

    #[test]
    fn toy_maximal_cells() {
        let mut arr = enumerate_ie(&toy(), &EnumerateOptions::default()).unwrap();
        assert_eq!(arr.len(), 16);
        let adj = build_adjacency(&mut arr);
        let max = locally_maximal(&arr, &adj);
        let mut sets: Vec<Vec<usize>> = max.iter().map(|&j| adj.column(j).ones().map(|i| i + 1).collect()).collect();
        sets.sort();
        assert_eq!(sets, vec![vec![1, 2, 3], vec![1, 2, 4, 5], vec![1, 3, 4, 5]]);
        let best = max_score_cells(&adj);
        assert_eq!(best.len(), 2);
        assert!(best.iter().all(|&j| adj.column_counts()[j] == 4));
    }

    #[test]
    fn single_observation() {
        let hs = vec![Hyperplane::new(&[0.3], 0.2, true).unwrap()];
        let mut arr = enumerate_ie(&hs, &EnumerateOptions::default()).unwrap();
        let adj = build_adjacency(&mut arr);
        let max = locally_maximal(&arr, &adj);
        assert_eq!(max.len(), 1);
        assert!(arr.cells[max[0]].sign.get(0));
        assert_eq!(max_score_cells(&adj), max);
    }

    #[test]
    fn complement_symmetry() {
        let hs = toy();
        let flipped: Vec<_> = hs.iter().map(|h| h.with_y(!h.y())).collect();
        let mut a = enumerate_ie(&hs, &EnumerateOptions::default()).unwrap();
        let mut b = a.clone();
        b.hyperplanes = flipped;
        let (aa, ab) = (build_adjacency(&mut a), build_adjacency(&mut b));
        for j in 0..aa.cols() {
            for i in 0..aa.rows() {
                assert!(aa.entry(i, j) ^ ab.entry(i, j));
            }
        }
    }
}
