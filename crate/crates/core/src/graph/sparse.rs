use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::Matrix;

const SYMMETRY_TOL: f64 = 1e-12;

/// Compressed-row sparse matrix of `f64`.
///
/// Column indices are sorted within each row and unique. The symmetric flag
/// is computed on construction and kept in sync by every transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triplets. Repeated coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut trips: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, v) in &trips {
            if i >= rows || j >= cols {
                return Err(Error::structural(format!("entry ({i}, {j}) outside {rows}x{cols} matrix")));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("entry ({i}, {j}) = {v}")));
            }
        }
        trips.sort_by_key(|t| (t.0, t.1));

        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trips {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            indptr[i + 1] += 1;
            indices.push(j);
            values.push(v);
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = SparseMatrix { rows, cols, indptr, indices, values, symmetric: false };
        m.symmetric = m.check_symmetric(SYMMETRY_TOL);
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Number of stored entries.
    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn symmetric_flag(&self) -> bool {
        self.symmetric
    }

    /// Stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].binary_search(&j).ok().map(|p| self.values[span.start + p])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_some()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Upper-triangular off-diagonal entries `(i, j, v)` with `i < j`.
    pub fn upper_off_diagonal(&self) -> Vec<(usize, usize, f64)> {
        self.iter().filter(|&(i, j, _)| i < j).collect()
    }

    /// Count of stored off-diagonal entries in the upper triangle.
    pub fn undirected_edge_count(&self) -> usize {
        self.iter().filter(|&(i, j, _)| i < j).count()
    }

    pub fn check_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        self.iter().all(|(i, j, v)| match self.get(j, i) {
            Some(w) => (v - w).abs() <= tol,
            None => false,
        })
    }

    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> SparseMatrix {
        let mut out = self.clone();
        for i in 0..self.rows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                out.values[p] = f(i, self.indices[p], self.values[p]);
            }
        }
        out.symmetric = out.check_symmetric(SYMMETRY_TOL);
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            m.set(i, j, v);
        }
        m
    }

    /// Sparse-times-dense product `self · d`.
    pub fn spmm(&self, d: &Matrix) -> Result<Matrix> {
        if self.cols != d.rows() {
            return Err(Error::structural(format!(
                "spmm dims {}x{} · {}x{}",
                self.rows,
                self.cols,
                d.rows(),
                d.cols()
            )));
        }
        let width = d.cols();
        let mut out = Matrix::zeros(self.rows, width);
        if width == 0 {
            return Ok(out);
        }
        out.as_mut_slice().par_chunks_mut(width).enumerate().for_each(|(i, orow)| {
            for (j, v) in self.row(i) {
                for (o, x) in orow.iter_mut().zip(d.row(j)) {
                    *o += v * x;
                }
            }
        });
        Ok(out)
    }

    /// `selfᵀ · d`, used for the backward pass of [`spmm`](Self::spmm).
    pub fn transpose_spmm(&self, d: &Matrix) -> Result<Matrix> {
        if self.symmetric {
            return self.spmm(d);
        }
        if self.rows != d.rows() {
            return Err(Error::structural(format!(
                "transpose_spmm dims ({}x{})ᵀ · {}x{}",
                self.rows,
                self.cols,
                d.rows(),
                d.cols()
            )));
        }
        let width = d.cols();
        let mut out = Matrix::zeros(self.cols, width);
        for (i, j, v) in self.iter() {
            let src = d.row(i).to_vec();
            for (o, x) in out.row_mut(j).iter_mut().zip(src) {
                *o += v * x;
            }
        }
        Ok(out)
    }
}
