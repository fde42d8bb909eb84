//! Dense and sparse linear algebra used by the discretizations.

mod cg;
mod dense;
pub mod eigen;
mod lu;
mod sparse;

pub use cg::{cg, CgOptions, CgStats};
pub use dense::{gemm, DenseMatrix, Transpose};
pub use lu::Lu;
pub use sparse::{CsrBuilder, CsrMatrix};

use alloc::vec::Vec;

/// A matrix stored either densely or in compressed sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl Matrix {
    pub fn rows(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.rows(),
            Matrix::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.cols(),
            Matrix::Sparse(m) => m.cols(),
        }
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Matrix::Dense(m) => m.matvec(x, y),
            Matrix::Sparse(m) => m.matvec(x, y),
        }
    }

    /// `y = Aᵀ x`
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Matrix::Dense(m) => m.matvec_t(x, y),
            Matrix::Sparse(m) => m.matvec_t(x, y),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.rows() * m.cols(),
            Matrix::Sparse(m) => m.nnz(),
        }
    }

    /// Nonzero entries of row `i` as `(column, value)`.
    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        match self {
            Matrix::Dense(m) => m.row(i).iter().copied().enumerate().collect(),
            Matrix::Sparse(m) => m.row(i).collect(),
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows())
            .map(|i| match self {
                Matrix::Dense(m) => m.row(i).iter().sum(),
                Matrix::Sparse(m) => m.row(i).map(|(_, v)| v).sum(),
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Matrix::Dense(m) => m.clone(),
            Matrix::Sparse(m) => m.to_dense(),
        }
    }

    /// `scale · selfᵀ · other`, dense if either factor is dense.
    pub fn gram(&self, other: &Matrix, scale: f64) -> Matrix {
        match (self, other) {
            (Matrix::Sparse(a), Matrix::Sparse(b)) => {
                let mut c = a.transpose().matmul(b);
                c.scale(scale);
                Matrix::Sparse(c)
            }
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                let mut c = DenseMatrix::zeros(a.cols(), b.cols());
                gemm(scale, &a, Transpose::Yes, &b, Transpose::No, 0.0, &mut c);
                Matrix::Dense(c)
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.rows().min(self.cols());
        match self {
            Matrix::Dense(m) => (0..n).map(|i| m[(i, i)]).collect(),
            Matrix::Sparse(m) => (0..n).map(|i| m.get(i, i)).collect(),
        }
    }
}
