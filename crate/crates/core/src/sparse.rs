//! Compressed-row complex matrices.

use std::collections::BTreeMap;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::operator::{CMatrix, C64};

/// Complex sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Duplicate coordinates are summed; exact zeros are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); n_rows];
        for (r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            *rows[r].entry(c).or_default() += v;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != C64::new(0.0, 0.0) {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut trip = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), trip)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(C64::new(0.0, 0.0), |(_, v)| v)
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n_cols);
        (0..self.n_rows).map(|r| self.row(r).map(|(c, a)| a * v[c]).sum()).collect()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.n_cols, self.n_rows, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// `A† A`.
    pub fn adjoint_times_self(&self) -> Self {
        let mut trip = Vec::new();
        for r in 0..self.n_rows {
            for (i, vi) in self.row(r) {
                for (j, vj) in self.row(r) {
                    trip.push((i, j, vi.conj() * vj));
                }
            }
        }
        Self::from_triplets(self.n_cols, self.n_cols, trip)
    }

    /// Whether every column indexed by `basis` maps into `basis`.
    pub(crate) fn preserves(&self, basis: &Basis) -> bool {
        self.triplets().all(|(r, c, _)| !basis.contains(c) || basis.contains(r))
    }

    /// Compression onto a subspace that the matrix leaves invariant.
    pub(crate) fn restrict(&self, basis: &Basis) -> Result<Self> {
        if !self.preserves(basis) {
            return Err(Error::NotInvariant);
        }
        let n = basis.len();
        let trip = self.triplets().filter_map(|(r, c, v)| Some((basis.position(r)?, basis.position(c)?, v)));
        Ok(Self::from_triplets(n, n, trip.collect::<Vec<_>>()))
    }

    /// `out += alpha · A · rho` for square dense `rho`.
    pub(crate) fn left_mul_acc(&self, alpha: C64, rho: &CMatrix, out: &mut CMatrix) {
        let n = rho.nrows();
        let src = rho.as_slice();
        let dst = out.as_mut_slice();
        for j in 0..rho.ncols() {
            let rcol = &src[j * n..(j + 1) * n];
            let ocol = &mut dst[j * n..(j + 1) * n];
            for (i, o) in ocol.iter_mut().enumerate() {
                let span = self.row_ptr[i]..self.row_ptr[i + 1];
                if span.is_empty() {
                    continue;
                }
                let mut acc = C64::new(0.0, 0.0);
                for (&k, &v) in self.col_idx[span.clone()].iter().zip(&self.values[span]) {
                    acc += v * rcol[k];
                }
                *o += alpha * acc;
            }
        }
    }

    /// `out += alpha · rho · A†` for square dense `rho`.
    pub(crate) fn right_mul_adjoint_acc(&self, alpha: C64, rho: &CMatrix, out: &mut CMatrix) {
        let n = rho.nrows();
        let src = rho.as_slice();
        let dst = out.as_mut_slice();
        for j in 0..self.n_rows {
            let ocol = &mut dst[j * n..(j + 1) * n];
            for (k, v) in self.row(j) {
                let w = alpha * v.conj();
                let rcol = &src[k * n..(k + 1) * n];
                for (o, r) in ocol.iter_mut().zip(rcol) {
                    *o += w * r;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> CMatrix {
        CMatrix::from_row_slice(3, 3, &[
            c(0.0, 0.0), c(1.0, 2.0), c(0.0, 0.0),
            c(0.5, 0.0), c(0.0, 0.0), c(0.0, -1.0),
            c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0),
        ])
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let s = SparseMatrix::from_dense(&a);
        assert_eq!(s.nnz(), 4);
        let rho = CMatrix::from_fn(3, 3, |i, j| c(i as f64 + 0.3 * j as f64, j as f64 - 0.7 * i as f64));
        let alpha = c(0.2, -1.1);

        let mut out = CMatrix::zeros(3, 3);
        s.left_mul_acc(alpha, &rho, &mut out);
        assert!((out - (&a * &rho) * alpha).norm() < 1e-14);

        let mut out = CMatrix::zeros(3, 3);
        s.right_mul_adjoint_acc(alpha, &rho, &mut out);
        assert!((out - (&rho * a.adjoint()) * alpha).norm() < 1e-14);

        assert!((s.adjoint_times_self().to_dense() - a.adjoint() * &a).norm() < 1e-14);
        assert_eq!(s.adjoint().to_dense(), a.adjoint());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let s = SparseMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (1, 0, c(0.0, 0.0))]);
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.get(0, 1), c(3.0, 0.0));
        assert_eq!(s.mul_vec(&[c(1.0, 0.0), c(0.0, 1.0)]), vec![c(0.0, 3.0), c(0.0, 0.0)]);
    }
}
