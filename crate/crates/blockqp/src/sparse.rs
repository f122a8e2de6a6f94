//! Compressed-sparse-column matrices and the mat-vec / normal-matrix kernels.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::vecops;

/// Sparse matrix in compressed-sparse-column form. Row indices are strictly
/// increasing within each column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut cols: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); ncols];
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::Dimension(format!(
                    "triplet ({r},{c}) out of bounds for {nrows}x{ncols}"
                )));
            }
            *cols[c].entry(r).or_insert(0.0) += v;
        }
        Ok(Self::from_column_maps(nrows, ncols, &cols))
    }

    fn from_column_maps(nrows: usize, ncols: usize, cols: &[BTreeMap<usize, f64>]) -> Self {
        let mut colptr = Vec::with_capacity(ncols + 1);
        let mut rowind = Vec::new();
        let mut values = Vec::new();
        colptr.push(0);
        for col in cols {
            for (&r, &v) in col {
                rowind.push(r);
                values.push(v);
            }
            colptr.push(rowind.len());
        }
        SparseMatrix { nrows, ncols, colptr, rowind, values }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, colptr: vec![0; ncols + 1], rowind: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowind: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        SparseMatrix {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowind: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rowind.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.colptr[j];
        let hi = self.colptr[j + 1];
        self.rowind[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// All stored entries as (row, col, value), column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| self.col(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut cols: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); self.nrows];
        for (i, j, v) in self.iter() {
            cols[i].insert(j, v);
        }
        Self::from_column_maps(self.ncols, self.nrows, &cols)
    }

    /// M v (or M^T v with `adjoint`), with dimension checking.
    pub fn spmv(&self, v: &[f64], adjoint: bool) -> Result<Vec<f64>> {
        let expect = if adjoint { self.nrows } else { self.ncols };
        if v.len() != expect {
            return Err(Error::Dimension(format!(
                "spmv: vector length {} does not match {} ({}x{}, adjoint={adjoint})",
                v.len(),
                expect,
                self.nrows,
                self.ncols
            )));
        }
        Ok(if adjoint { self.mul_vec_t(v) } else { self.mul_vec(v) })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.ncols);
        let mut out = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let vj = v[j];
            if vj != 0.0 {
                for (i, a) in self.col(j) {
                    out[i] += a * vj;
                }
            }
        }
        out
    }

    pub fn mul_vec_t(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for (i, a) in self.col(j) {
                acc += a * v[i];
            }
            out[j] = acc;
        }
        out
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= alpha;
        }
        out
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension(format!(
                "add: {}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut cols: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); self.ncols];
        for (i, j, v) in self.iter().chain(other.iter()) {
            *cols[j].entry(i).or_insert(0.0) += v;
        }
        Ok(Self::from_column_maps(self.nrows, self.ncols, &cols))
    }

    /// self + alpha * I
    pub fn add_scaled_identity(&self, alpha: f64) -> Result<SparseMatrix> {
        let n = self.nrows.min(self.ncols);
        let eye: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, alpha)).collect();
        self.add(&SparseMatrix::from_triplets(self.nrows, self.ncols, &eye)?)
    }

    /// If the matrix is exactly `alpha * I`, return `alpha`.
    pub fn as_scalar_identity(&self) -> Option<f64> {
        if self.nrows != self.ncols || self.nnz() != self.nrows {
            return None;
        }
        let mut alpha = None;
        for (i, j, v) in self.iter() {
            if i != j {
                return None;
            }
            match alpha {
                None => alpha = Some(v),
                Some(a) if a == v => {}
                _ => return None,
            }
        }
        alpha
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for (i, j, v) in self.iter() {
            if i == j {
                d[i] = v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        vecops::dot(x, &self.mul_vec(x))
    }

    /// Rows that contain at least one structural nonzero.
    pub fn nonzero_rows(&self) -> Vec<bool> {
        let mut rows = vec![false; self.nrows];
        for &i in &self.rowind {
            rows[i] = true;
        }
        rows
    }
}

pub enum NormalMode {
    /// M M^T
    MMt,
    /// M^T M
    MtM,
}

/// Exact symmetric normal matrix M M^T or M^T M; both triangles stored and
/// bit-identical across the diagonal.
pub fn form_normal(m: &SparseMatrix, mode: NormalMode) -> SparseMatrix {
    match mode {
        NormalMode::MtM => form_normal(&m.transpose(), NormalMode::MMt),
        NormalMode::MMt => {
            let mut cols: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); m.nrows];
            for k in 0..m.ncols {
                let entries: Vec<(usize, f64)> = m.col(k).collect();
                for &(i, vi) in &entries {
                    for &(j, vj) in &entries {
                        *cols[j].entry(i).or_insert(0.0) += vi * vj;
                    }
                }
            }
            SparseMatrix::from_column_maps(m.nrows, m.nrows, &cols)
        }
    }
}

/// An implicit linear map with an optional adjoint.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, v: &[f64]) -> Vec<f64>;
    fn apply_adjoint(&self, _v: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.mul_vec(v)
    }
    fn apply_adjoint(&self, v: &[f64]) -> Option<Vec<f64>> {
        Some(self.mul_vec_t(v))
    }
}

/// v ↦ left^T (right v), used for the cross-block norms ‖A_i^* A_j‖ without
/// forming the product.
pub struct CrossGram<'a> {
    pub left: &'a SparseMatrix,
    pub right: &'a SparseMatrix,
}

impl LinearOperator for CrossGram<'_> {
    fn nrows(&self) -> usize {
        self.left.ncols()
    }
    fn ncols(&self) -> usize {
        self.right.ncols()
    }
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.left.mul_vec_t(&self.right.mul_vec(v))
    }
    fn apply_adjoint(&self, v: &[f64]) -> Option<Vec<f64>> {
        Some(self.right.mul_vec_t(&self.left.mul_vec(v)))
    }
}

/// Power-iteration estimate of the spectral norm. Callers that need a
/// guaranteed upper bound must add their own safety margin: power iteration
/// approaches the true norm from below.
pub fn spectral_norm(op: &dyn LinearOperator) -> f64 {
    let (m, n) = (op.nrows(), op.ncols());
    if m == 0 || n == 0 {
        return 0.0;
    }
    // deterministic, generically non-orthogonal start
    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + 0.5 * ((j + 1) as f64).sin()).collect();
    let nv = vecops::norm2(&v);
    vecops::scale(1.0 / nv, &mut v);
    let mut sigma = 0.0f64;
    for _ in 0..1000 {
        let u = op.apply(&v);
        let w = op
            .apply_adjoint(&u)
            .expect("spectral_norm requires an operator with an adjoint");
        let nw = vecops::norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw.sqrt();
        let done = (next - sigma).abs() <= 1e-10 * next.max(1e-300);
        sigma = next;
        v = w;
        vecops::scale(1.0 / nw, &mut v);
        if done {
            break;
        }
    }
    sigma
}
