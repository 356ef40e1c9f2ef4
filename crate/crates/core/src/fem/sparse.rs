use std::io::Write;

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{LodError, Result};

/// Compressed sparse row matrix.
///
/// Stored entries are never exactly zero; `symmetric` is only set after the
/// stored values were checked to be exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            debug_assert!(r < nrows && c < ncols);
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        }
        .pruned()
    }

    pub(crate) fn from_csr_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        }
        .pruned()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    fn pruned(mut self) -> Self {
        if self.values.iter().all(|v| *v != 0.0) {
            return self;
        }
        let mut row_ptr = vec![0; self.nrows + 1];
        let mut k = 0;
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.values[p] != 0.0 {
                    self.col_idx[k] = self.col_idx[p];
                    self.values[k] = self.values[p];
                    k += 1;
                }
            }
            row_ptr[i + 1] = k;
        }
        self.col_idx.truncate(k);
        self.values.truncate(k);
        self.row_ptr = row_ptr;
        self
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Largest `|a_ij - a_ji|` over the stored pattern.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Sets the symmetry flag when the stored values are exactly symmetric.
    pub fn mark_symmetric(mut self) -> Self {
        self.symmetric = self.nrows == self.ncols && self.max_asymmetry() == 0.0;
        self
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    /// `A^T x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        y
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                col_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Sparse product `self * rhs` (row-wise accumulation).
    pub fn matmul(&self, rhs: &SparseMatrix) -> Self {
        assert_eq!(self.ncols, rhs.nrows);
        let mut acc = vec![0.0; rhs.ncols];
        let mut marker = vec![usize::MAX; rhs.ncols];
        let mut row_ptr = vec![0; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (rcols, rvals) = rhs.row(k);
                for (&j, &b) in rcols.iter().zip(rvals) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Self::from_csr_parts(self.nrows, rhs.ncols, row_ptr, col_idx, values)
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &SparseMatrix, scale: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let triplets = self
            .triplets()
            .chain(other.triplets().map(|(i, j, v)| (i, j, scale * v)));
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.pruned()
    }

    /// Scales row `i` by `factors[i]`.
    pub fn scale_rows(&self, factors: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, f) in factors.iter().enumerate() {
            for p in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.values[p] *= f;
            }
        }
        out.symmetric = false;
        out.pruned()
    }

    /// Submatrix with the given (sorted or unsorted) row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (local, &c) in cols.iter().enumerate() {
            col_map[c] = local;
        }
        let triplets = rows.iter().enumerate().flat_map(|(li, &i)| {
            let (rc, rv) = self.row(i);
            let col_map = &col_map;
            rc.iter()
                .zip(rv)
                .filter(move |(j, _)| col_map[**j] != usize::MAX)
                .map(move |(&j, &v)| (li, col_map[j], v))
        });
        let out = Self::from_triplets(rows.len(), cols.len(), triplets.collect::<Vec<_>>());
        if self.symmetric && rows == cols {
            out.mark_symmetric()
        } else {
            out
        }
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| LodError::Factorization(format!("{e:?}")))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Writes `row col value` lines (0-based).
    pub fn write_triplets<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(m: &SparseMatrix) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; m.ncols()]; m.nrows()];
        for (i, j, v) in m.triplets() {
            d[i][j] = v;
        }
        d
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0), (1, 0, -1.0)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn symmetry_flag_requires_exact_symmetry() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 1.0)]).mark_symmetric();
        assert!(m.is_symmetric());
        let m = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 1.0 + 1e-15)]).mark_symmetric();
        assert!(!m.is_symmetric());
    }

    fn arb_matrix(r: usize, c: usize) -> impl Strategy<Value = SparseMatrix> {
        proptest::collection::vec((0..r, 0..c, -3.0f64..3.0), 0..20)
            .prop_map(move |t| SparseMatrix::from_triplets(r, c, t))
    }

    proptest! {
        #[test]
        fn product_and_transpose_match_dense(a in arb_matrix(4, 5), b in arb_matrix(5, 3), x in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let ab = dense(&a.matmul(&b));
            let (da, db) = (dense(&a), dense(&b));
            for i in 0..4 {
                for j in 0..3 {
                    let s: f64 = (0..5).map(|k| da[i][k] * db[k][j]).sum();
                    prop_assert!((ab[i][j] - s).abs() < 1e-12);
                }
            }
            let at = a.transpose();
            let y1 = at.mul_vec(&x);
            let y2 = a.tr_mul_vec(&x);
            for (u, v) in y1.iter().zip(&y2) {
                prop_assert!((u - v).abs() < 1e-12);
            }
            prop_assert_eq!(at.transpose(), a);
        }
    }

    #[test]
    fn submatrix_extracts_entries() {
        let m = SparseMatrix::from_triplets(3, 3, [(0, 0, 1.0), (1, 2, 2.0), (2, 1, 3.0), (2, 2, 4.0)]);
        let s = m.submatrix(&[2, 1], &[2, 1]);
        assert_eq!(dense(&s), vec![vec![4.0, 3.0], vec![2.0, 0.0]]);
    }
}
