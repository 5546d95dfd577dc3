//! Compressed sparse row matrices.

use nalgebra::DMatrix;
use std::io::{self, Write};

/// Sparse matrix in compressed row storage.
///
/// Column indices inside a row are sorted and unique. The `symmetric`
/// flag is only set by constructors that guarantee `A == A^T` bit for bit.
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
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates
    /// in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) out of range");
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        // bucket by row, keeping input order inside each row
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0f64; triplets.len()];
        for &(i, j, v) in triplets {
            let p = next[i];
            cols[p] = j;
            vals[p] = v;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..nrows {
            let (lo, hi) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(lo..hi);
            // stable sort keeps the summation order deterministic
            order.sort_by_key(|&p| cols[p]);
            let mut last: Option<usize> = None;
            for &p in &order {
                if last == Some(cols[p]) {
                    *values.last_mut().unwrap() += vals[p];
                } else {
                    col_idx.push(cols[p]);
                    values.push(vals[p]);
                    last = Some(cols[p]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix { nrows, ncols, row_ptr, col_idx, values, symmetric: false }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetric: nrows == ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: d.to_vec(),
            symmetric: true,
        }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &t)
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(col, value)` over the stored entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *yi = s;
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut y = DMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            let xs = col.as_slice();
            let mut out = y.column_mut(c);
            for i in 0..self.nrows {
                let mut s = 0.0;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.values[p] * xs[self.col_idx[p]];
                }
                out[i] = s;
            }
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        let mut m = Self::from_triplets(self.ncols, self.nrows, &t);
        m.symmetric = self.symmetric;
        m
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
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
            row_ptr.push(col_idx.len());
        }
        SparseMatrix { nrows: self.nrows, ncols: other.ncols, row_ptr, col_idx, values, symmetric: false }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &SparseMatrix, alpha: f64) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let (mut p, pe) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut q, qe) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while p < pe || q < qe {
                let cp = if p < pe { self.col_idx[p] } else { usize::MAX };
                let cq = if q < qe { other.col_idx[q] } else { usize::MAX };
                if cp == cq {
                    col_idx.push(cp);
                    values.push(self.values[p] + alpha * other.values[q]);
                    p += 1;
                    q += 1;
                } else if cp < cq {
                    col_idx.push(cp);
                    values.push(self.values[p]);
                    p += 1;
                } else {
                    col_idx.push(cq);
                    values.push(alpha * other.values[q]);
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
            symmetric: self.symmetric && other.symmetric,
        }
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// Returns `(A + A^T) / 2`, which is symmetric to the bit.
    pub fn symmetrized(&self) -> SparseMatrix {
        assert_eq!(self.nrows, self.ncols);
        let t = self.transpose();
        let mut m = self.add_scaled(&t, 1.0);
        m.values.iter_mut().for_each(|v| *v *= 0.5);
        m.symmetric = true;
        m
    }

    /// Exact (bitwise) symmetry test.
    pub fn is_symmetric_exact(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if self.get(j, i).to_bits() != v.to_bits() {
                    return false;
                }
            }
        }
        true
    }

    /// Restriction to the given rows and columns (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut colmap = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            colmap[old] = new;
        }
        let mut t = Vec::new();
        for (ni, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if colmap[j] != usize::MAX {
                    t.push((ni, colmap[j], v));
                }
            }
        }
        let mut m = Self::from_triplets(rows.len(), cols.len(), &t);
        m.symmetric = self.symmetric && rows == cols;
        m
    }

    /// Assembles a block matrix; `None` blocks are zero.
    pub fn block(blocks: &[Vec<Option<&SparseMatrix>>]) -> SparseMatrix {
        let br = blocks.len();
        let bc = blocks[0].len();
        let mut heights = vec![0usize; br];
        let mut widths = vec![0usize; bc];
        for (i, row) in blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    heights[i] = b.nrows;
                    widths[j] = b.ncols;
                }
            }
        }
        let roff: Vec<usize> = heights
            .iter()
            .scan(0, |s, &h| {
                let o = *s;
                *s += h;
                Some(o)
            })
            .collect();
        let coff: Vec<usize> = widths
            .iter()
            .scan(0, |s, &w| {
                let o = *s;
                *s += w;
                Some(o)
            })
            .collect();
        let mut t = Vec::new();
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    for i in 0..b.nrows {
                        for (j, v) in b.row(i) {
                            t.push((roff[bi] + i, coff[bj] + j, v));
                        }
                    }
                }
            }
        }
        Self::from_triplets(heights.iter().sum(), widths.iter().sum(), &t)
    }

    /// Block diagonal matrix with `copies` copies of `self`.
    pub fn block_diag(&self, copies: usize) -> SparseMatrix {
        let mut blocks = vec![vec![None; copies]; copies];
        for (i, row) in blocks.iter_mut().enumerate() {
            row[i] = Some(self);
        }
        let mut m = Self::block(&blocks);
        m.symmetric = self.symmetric;
        m
    }

    /// Marks the matrix symmetric after verifying it bitwise.
    pub fn assert_symmetric(mut self) -> SparseMatrix {
        assert!(self.is_symmetric_exact(), "matrix is not symmetric");
        self.symmetric = true;
        self
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes the matrix in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 4.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.row(0).map(|(j, _)| j).collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let b = SparseMatrix::from_triplets(3, 2, &[(0, 1, 1.0), (1, 0, -2.0), (2, 0, 5.0)]);
        let c = a.matmul(&b).to_dense();
        assert_eq!(c, a.to_dense() * b.to_dense());
    }

    #[test]
    fn symmetrized_is_bitwise_symmetric() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 1, 0.1), (1, 0, 0.2), (2, 2, 1.0), (0, 2, 0.3)]);
        let s = a.symmetrized();
        assert!(s.is_symmetric_exact());
        assert!(!a.is_symmetric_exact());
    }

    #[test]
    fn select_and_block() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (0, 2, 4.0)]);
        let s = a.select(&[0, 2], &[0, 2]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 0.0, 3.0]));
        let b = SparseMatrix::block(&[vec![Some(&a), None], vec![None, Some(&a)]]);
        assert_eq!(b.nrows(), 6);
        assert_eq!(b.get(3, 5), 4.0);
    }
}
