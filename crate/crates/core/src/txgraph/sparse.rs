use serde::{Deserialize, Serialize};

use super::GraphError;
use crate::dense::{DenseMatrix, ShapeError};
use crate::scalar::Scalar;

/// Square CSR matrix over graph nodes.
///
/// Invariants (checked by every constructor): `row_ptr.len() == n + 1`,
/// `row_ptr[0] == 0`, `row_ptr[n] == nnz`, `row_ptr` non-decreasing, every
/// column index `< n`, and columns strictly increasing within a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SparseAdjacency<T> {
    n_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseAdjacency<T> {
    pub fn empty(n_nodes: usize) -> Self {
        Self { n_nodes, row_ptr: vec![0; n_nodes + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            row_ptr: (0..=n_nodes).collect(),
            col_idx: (0..n_nodes).collect(),
            values: vec![T::one(); n_nodes],
        }
    }

    /// Builds from `(row, col, value)` triplets in any order; duplicates are summed.
    pub fn from_coo(n_nodes: usize, triplets: &[(usize, usize, T)]) -> Result<Self, GraphError> {
        let mut sorted: Vec<(usize, usize, T)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n_nodes || j >= n_nodes {
                return Err(GraphError::IndexOutOfRange { row: i, col: j, n_nodes });
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; n_nodes + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("merged entry exists") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_nodes {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n_nodes, row_ptr, col_idx, values })
    }

    /// Validates raw CSR arrays.
    pub fn from_csr_parts(
        n_nodes: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self, GraphError> {
        let m = Self { n_nodes, row_ptr, col_idx, values };
        m.check_invariants()?;
        Ok(m)
    }

    pub fn check_invariants(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::Invariant(msg));
        if self.row_ptr.len() != self.n_nodes + 1 {
            return bad(format!("row_ptr has {} entries for {} nodes", self.row_ptr.len(), self.n_nodes));
        }
        if self.row_ptr[0] != 0 || self.row_ptr[self.n_nodes] != self.col_idx.len() {
            return bad("row_ptr endpoints do not bracket nnz".into());
        }
        if self.values.len() != self.col_idx.len() {
            return bad("values and col_idx lengths differ".into());
        }
        for i in 0..self.n_nodes {
            if self.row_ptr[i] > self.row_ptr[i + 1] {
                return bad(format!("row_ptr decreases at row {i}"));
            }
            let cols = self.neighbors(i);
            if cols.iter().any(|&j| j >= self.n_nodes) {
                return bad(format!("row {i} has a column index out of range"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {i} columns are not strictly increasing"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices of row `i`, ascending.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    #[inline]
    pub fn row_values(&self, i: usize) -> &[T] {
        &self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_nodes).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Entry `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> T {
        match self.neighbors(i).binary_search(&j) {
            Ok(k) => self.row_values(i)[k],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n_nodes {
            for (&j, &v) in self.neighbors(i).iter().zip(self.row_values(i)) {
                out.push((i, j, v));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n_nodes, self.n_nodes);
        for (i, j, v) in self.triplets() {
            d.set(i, j, v);
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_coo(self.n_nodes, &t).expect("indices already validated")
    }

    /// `A + Aᵀ` off the diagonal; diagonal entries are kept once.
    pub fn symmetrize(&self) -> Self {
        let mut t = self.triplets();
        t.extend(self.triplets().into_iter().filter(|(i, j, _)| i != j).map(|(i, j, v)| (j, i, v)));
        Self::from_coo(self.n_nodes, &t).expect("indices already validated")
    }

    /// Adds `weight` on every diagonal entry (merged with any existing self-loop).
    pub fn with_self_loops(&self, weight: T) -> Self {
        let mut t = self.triplets();
        t.extend((0..self.n_nodes).map(|i| (i, i, weight)));
        Self::from_coo(self.n_nodes, &t).expect("indices already validated")
    }

    /// Scales each non-empty row to sum to one.
    pub fn row_normalize(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_nodes {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            let sum = out.values[range.clone()].iter().fold(T::zero(), |s, &v| s + v);
            if sum != T::zero() {
                for v in &mut out.values[range] {
                    *v /= sum;
                }
            }
        }
        out
    }

    pub fn map_values(&self, f: impl Fn(usize, usize, T) -> T) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_nodes {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] = f(i, self.col_idx[k], self.values[k]);
            }
        }
        out
    }

    /// `A · X`.
    pub fn spmm(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>, ShapeError> {
        if x.rows() != self.n_nodes {
            return Err(ShapeError::new(
                "spmm",
                format!("adjacency has {} nodes, features have {} rows", self.n_nodes, x.rows()),
            ));
        }
        let d = x.cols();
        let mut out = DenseMatrix::zeros(self.n_nodes, d);
        for i in 0..self.n_nodes {
            let o = out.row_mut(i);
            for (&j, &a) in self.neighbors(i).iter().zip(self.row_values(i)) {
                for (o, &xv) in o.iter_mut().zip(x.row(j)) {
                    *o += a * xv;
                }
            }
        }
        Ok(out)
    }

    /// `Aᵀ · G`, scattering instead of transposing.
    pub fn spmm_t(&self, g: &DenseMatrix<T>) -> Result<DenseMatrix<T>, ShapeError> {
        if g.rows() != self.n_nodes {
            return Err(ShapeError::new(
                "spmm_t",
                format!("adjacency has {} nodes, gradient has {} rows", self.n_nodes, g.rows()),
            ));
        }
        let d = g.cols();
        let mut out = DenseMatrix::zeros(self.n_nodes, d);
        for i in 0..self.n_nodes {
            let gi = g.row(i).to_vec();
            for (&j, &a) in self.neighbors(i).iter().zip(self.row_values(i)) {
                for (o, &gv) in out.row_mut(j).iter_mut().zip(&gi) {
                    *o += a * gv;
                }
            }
        }
        Ok(out)
    }

    /// Relabels nodes: old node `perm[k]` becomes new node `k`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let mut inv = vec![0usize; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (inv[i], inv[j], v)).collect();
        Self::from_coo(self.n_nodes, &t).expect("permutation keeps indices in range")
    }

    pub fn cast<U: Scalar>(&self) -> SparseAdjacency<U> {
        SparseAdjacency {
            n_nodes: self.n_nodes,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}
