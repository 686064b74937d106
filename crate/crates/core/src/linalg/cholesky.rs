use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::SymMatrix;
use crate::error::{check_dim, Error, Result};

/// Multipliers of `trace(A)/D` tried after a plain factorization fails.
const DEFAULT_RIDGE_STEPS: [f64; 7] = [1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3];

/// How much diagonal loading `spd_factorize` may add to obtain a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RidgePolicy {
    /// Try `0`, then `1e-9 * trace/D` escalating by 10x up to `1e-3 * trace/D`.
    #[default]
    Default,
    /// Only `0`; a singular matrix is an error.
    None,
}

impl RidgePolicy {
    /// The ridge values tried in order for `a`.
    pub fn schedule(&self, a: &SymMatrix) -> Vec<f64> {
        match self {
            RidgePolicy::None => vec![0.0],
            RidgePolicy::Default => {
                let mut scale = a.trace() / a.dim() as f64;
                // a zero (or negative-trace) matrix has no natural scale
                if !(scale.is_finite() && scale > 0.0) {
                    scale = 1.0;
                }
                std::iter::once(0.0)
                    .chain(DEFAULT_RIDGE_STEPS.iter().map(|m| m * scale))
                    .collect()
            }
        }
    }
}

impl std::str::FromStr for RidgePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(RidgePolicy::Default),
            "none" => Ok(RidgePolicy::None),
            other => Err(Error::input(format!("unknown ridge policy '{other}'"))),
        }
    }
}

/// Lower-triangular `L` with `L·Lᵀ = A + ridge·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactorization {
    dim: usize,
    // row-major, only the lower triangle is meaningful
    factor: Vec<f64>,
    ridge: f64,
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn factor(&self) -> Array2<f64> {
        let n = self.dim;
        Array2::from_shape_fn((n, n), |(i, j)| if j <= i { self.factor[i * n + j] } else { 0.0 })
    }

    /// Factorize `a + ridge·I` with exactly the given ridge.
    pub fn with_ridge(a: &SymMatrix, ridge: f64) -> Result<Self> {
        cholesky(a, ridge).map_err(|pivot| {
            Error::numerical(format!(
                "matrix of dim {} is not positive definite with ridge {ridge:e} (pivot {pivot:e})",
                a.dim()
            ))
        })
    }

    /// Solves `L·y = b` in place.
    pub(crate) fn forward_solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.factor[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, y)| l * y).sum();
            b[i] = (b[i] - s) / self.factor[i * n + i];
        }
    }

    /// Solves `Lᵀ·x = y` in place.
    fn backward_solve_in_place(&self, y: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let xi = y[i] / self.factor[i * n + i];
            y[i] = xi;
            // column i of Lᵀ is row i of L
            let row = &self.factor[i * n..i * n + i];
            for (yj, l) in y[..i].iter_mut().zip(row) {
                *yj -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim("solve_spd", self.dim, b.len())?;
        let mut x = b.to_vec();
        self.forward_solve_in_place(&mut x);
        self.backward_solve_in_place(&mut x);
        Ok(x)
    }

    /// `vᵀ (A + ridge·I)⁻¹ v` as `‖L⁻¹v‖²`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        check_dim("quad_form", self.dim, v.len())?;
        let mut y = v.to_vec();
        self.forward_solve_in_place(&mut y);
        Ok(y.iter().map(|t| t * t).sum())
    }
}

/// Returns the smallest failing pivot on error.
fn cholesky(a: &SymMatrix, ridge: f64) -> std::result::Result<SpdFactorization, f64> {
    let n = a.dim();
    let max_diag = (0..n).map(|i| a.get(i, i) + ridge).fold(0.0_f64, f64::max);
    // pivots at roundoff level relative to the diagonal count as zero
    let tol = n as f64 * f64::EPSILON * max_diag;
    let mut factor = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = factor[i * n..i * n + j]
                .iter()
                .zip(&factor[j * n..j * n + j])
                .map(|(x, y)| x * y)
                .sum();
            if i == j {
                let pivot = a.get(i, i) + ridge - s;
                if pivot.is_nan() || pivot <= tol || !pivot.is_finite() {
                    return Err(pivot);
                }
                factor[i * n + i] = pivot.sqrt();
            } else {
                factor[i * n + j] = (a.get(i, j) - s) / factor[j * n + j];
            }
        }
    }
    Ok(SpdFactorization {
        dim: n,
        factor,
        ridge,
    })
}

/// Cholesky factorization with the smallest ridge from `policy` that succeeds.
pub fn spd_factorize(a: &SymMatrix, policy: RidgePolicy) -> Result<SpdFactorization> {
    if !a.is_finite() {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let mut worst_pivot = f64::INFINITY;
    for ridge in policy.schedule(a) {
        match cholesky(a, ridge) {
            Ok(f) => return Ok(f),
            Err(p) => worst_pivot = worst_pivot.min(p),
        }
    }
    Err(Error::numerical(format!(
        "matrix of dim {} is not positive definite under ridge policy {policy:?}; \
         most negative pivot {worst_pivot:e}",
        a.dim()
    )))
}

pub fn solve_spd(f: &SpdFactorization, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}

pub fn quad_form(f: &SpdFactorization, v: &[f64]) -> Result<f64> {
    f.quad_form(v)
}
