//! Dense symmetric linear algebra used by every scorer.
//!
//! Everything here works in `f64`. Matrices are `ndarray::Array2` in
//! row-major layout; factor and eigenvector storage is private to each type.

mod cholesky;
mod eigen;

pub use cholesky::{quad_form, solve_spd, spd_factorize, RidgePolicy, SpdFactorization};
pub use eigen::{eigh, EigenDecomposition};

pub(crate) use eigen::eigh_labeled;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// A real symmetric matrix. Construction symmetrizes the input as `(A + Aᵀ)/2`,
/// so `get(i, j) == get(j, i)` holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows == 0 || rows != cols {
            return Err(Error::input(format!(
                "symmetric matrix must be square with dim >= 1, got {rows}x{cols}"
            )));
        }
        let mut data = a;
        for i in 0..rows {
            for j in 0..i {
                let avg = 0.5 * (data[(i, j)] + data[(j, i)]);
                data[(i, j)] = avg;
                data[(j, i)] = avg;
            }
        }
        Ok(SymMatrix { data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut a = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::input(format!(
                    "row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        SymMatrix::new(a)
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix {
            data: Array2::eye(dim.max(1)),
        }
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let mut a = Array2::zeros((diag.len(), diag.len()));
        for (i, &v) in diag.iter().enumerate() {
            a[(i, i)] = v;
        }
        SymMatrix::new(a)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }
}
