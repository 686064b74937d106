//! Per-eigen-axis breakdown of MD and RMD.
//!
//! With `Σ = V·diag(λ)·Vᵀ`, `MD_k(z) = Σ_d l_d²/λ_d` where `l_d = v_dᵀ(z - μ_k)`.
//! The per-axis RMD term subtracts the 1D background distance along the same
//! axis, `m_d²/s_d` with `m_d = v_dᵀ(z - μ₀)` and `s_d = v_dᵀ Σ₀ v_d`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gaussian::GaussianSuite;
use crate::scoring::{class_distances, eigen_projections};

/// Fraction of the largest mean gap under which an axis counts as
/// non-discriminative for `suggested_split`. Heuristic.
pub const SPLIT_GAP_FRACTION: f64 = 0.05;

/// Index of the nearest class per sample; ties go to the lowest index.
fn nearest_classes(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<Vec<usize>> {
    let md = class_distances(suite, test)?;
    Ok(md
        .rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::INFINITY), |best, (k, &v)| if v < best.1 { (k, v) } else { best })
                .0
        })
        .collect())
}

/// `N x D` matrix of `l_d²/λ_d` at each sample's nearest class. Rows sum to
/// the sample's MD.
pub fn decompose_md(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<Array2<f64>> {
    let nearest = nearest_classes(suite, test)?;
    let spectrum = suite.spectrum()?;
    let lambda = spectrum.eigen.eigenvalues();
    let mut proj = eigen_projections(suite, test)?;
    for (mut row, &k) in proj.rows_mut().into_iter().zip(&nearest) {
        let mean = spectrum.projected_means.row(k);
        for ((p, m), l) in row.iter_mut().zip(mean).zip(lambda) {
            let diff = *p - m;
            *p = diff * diff / l;
        }
    }
    Ok(proj)
}

/// `N x D` matrix of `l_d²/λ_d - m_d²/s_d`. Columns do not sum to the full
/// RMD, whose background term lives in the eigen-basis of `Σ₀`.
pub fn decompose_rmd(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<Array2<f64>> {
    let nearest = nearest_classes(suite, test)?;
    let spectrum = suite.spectrum()?;
    let lambda = spectrum.eigen.eigenvalues();
    let bg_var = &spectrum.background_var;
    let mut proj = eigen_projections(suite, test)?;
    for (mut row, &k) in proj.rows_mut().into_iter().zip(&nearest) {
        let mean = spectrum.projected_means.row(k);
        for (d, p) in row.iter_mut().enumerate() {
            let l = *p - mean[d];
            let m = *p;
            *p = l * l / lambda[d] - m * m / bg_var[d];
        }
    }
    Ok(proj)
}

/// Both per-axis decompositions for one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenContributions {
    pub md: Array2<f64>,
    pub rmd: Array2<f64>,
}

impl EigenContributions {
    pub fn compute(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<Self> {
        Ok(EigenContributions {
            md: decompose_md(suite, test)?,
            rmd: decompose_rmd(suite, test)?,
        })
    }
}

/// Mean and [10%, 90%] quantiles of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDimStats {
    /// 1-based eigen index, descending eigenvalue order.
    pub d: usize,
    pub lambda: f64,
    pub ind_md: ColumnStats,
    pub ood_md: ColumnStats,
    pub ind_rmd: ColumnStats,
    pub ood_rmd: ColumnStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub dim: usize,
    pub per_dim: Vec<EigenDimStats>,
    /// Heuristic: first axis after which every mean OOD-IND MD gap stays
    /// below `SPLIT_GAP_FRACTION` of the largest gap.
    pub suggested_split: usize,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn column_stats(m: &Array2<f64>, d: usize) -> ColumnStats {
    let mut col = m.column(d).to_vec();
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    col.sort_by(f64::total_cmp);
    ColumnStats {
        mean,
        q10: quantile_sorted(&col, 0.1),
        q90: quantile_sorted(&col, 0.9),
    }
}

/// Per-axis summary of IND and OOD contributions.
pub fn summarize(eigenvalues: &[f64], ind: &EigenContributions, ood: &EigenContributions) -> Result<EigenReport> {
    let dim = eigenvalues.len();
    for (name, c) in [("IND", ind), ("OOD", ood)] {
        if c.md.nrows() == 0 || c.rmd.nrows() == 0 {
            return Err(Error::input(format!("{name} contribution set is empty")));
        }
        if c.md.ncols() != dim || c.rmd.ncols() != dim {
            return Err(Error::input(format!(
                "{name} contributions have {} columns, expected {dim}",
                c.md.ncols()
            )));
        }
    }
    let per_dim: Vec<EigenDimStats> = (0..dim)
        .map(|d| EigenDimStats {
            d: d + 1,
            lambda: eigenvalues[d],
            ind_md: column_stats(&ind.md, d),
            ood_md: column_stats(&ood.md, d),
            ind_rmd: column_stats(&ind.rmd, d),
            ood_rmd: column_stats(&ood.rmd, d),
        })
        .collect();
    let gaps: Vec<f64> = per_dim.iter().map(|s| s.ood_md.mean - s.ind_md.mean).collect();
    Ok(EigenReport {
        dim,
        suggested_split: suggested_split(&gaps),
        per_dim,
    })
}

/// Smallest 1-based `d` such that every gap from `d` on is below the
/// threshold. All-zero (or all-negative) gaps give 1.
fn suggested_split(gaps: &[f64]) -> usize {
    let max_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_gap.is_nan() || max_gap <= 0.0 {
        return 1;
    }
    let threshold = SPLIT_GAP_FRACTION * max_gap;
    let last_above = gaps.iter().rposition(|&g| g >= threshold).expect("max gap is above");
    last_above + 2
}

/// Decomposes both test sets and summarizes them.
pub fn eigen_report(suite: &GaussianSuite, ind: &FeatureMatrix, ood: &FeatureMatrix) -> Result<EigenReport> {
    let ind_c = EigenContributions::compute(suite, ind)?;
    let ood_c = EigenContributions::compute(suite, ood)?;
    summarize(suite.shared_eigen()?.eigenvalues(), &ind_c, &ood_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use ndarray::{arr1, arr2};

    fn diag_suite() -> GaussianSuite {
        let cov = arr2(&[[4.0, 0.0], [0.0, 1.0]]);
        GaussianSuite::from_parts(
            arr2(&[[0.0, 0.0]]),
            SymMatrix::new(cov.clone()).unwrap(),
            0.0,
            arr1(&[0.0, 0.0]),
            SymMatrix::new(cov).unwrap(),
            0.0,
            vec![1],
            "t".into(),
        )
        .unwrap()
    }

    #[test]
    fn diagonal_contributions() {
        let s = diag_suite();
        let test = FeatureMatrix::from_rows(&[vec![2.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let c = decompose_md(&s, &test).unwrap();
        assert_eq!(c.row(0).to_vec(), vec![1.0, 4.0]);
        assert_eq!(c.row(1).to_vec(), vec![0.0, 0.0]);
        let r = decompose_rmd(&s, &test).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(quantile_sorted(&xs, 0.1), 1.0);
        assert_eq!(quantile_sorted(&xs, 0.9), 9.0);
        assert!((quantile_sorted(&[0.0, 1.0], 0.1) - 0.1).abs() < 1e-15);
        assert_eq!(quantile_sorted(&[3.0], 0.9), 3.0);
    }

    #[test]
    fn identical_sets_split_at_one() {
        let s = diag_suite();
        let test = FeatureMatrix::from_rows(&[vec![2.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let report = eigen_report(&s, &test, &test).unwrap();
        assert_eq!(report.suggested_split, 1);
        for dim in &report.per_dim {
            assert!(dim.ind_md.q10 <= dim.ind_md.q90);
        }
    }

    #[test]
    fn split_after_last_large_gap() {
        assert_eq!(suggested_split(&[10.0, 3.0, 0.1, 0.2]), 3);
        assert_eq!(suggested_split(&[0.1, 10.0, 0.0]), 3);
        assert_eq!(suggested_split(&[1.0, 1.0]), 3);
        assert_eq!(suggested_split(&[-1.0, -2.0]), 1);
    }

    #[test]
    fn summarize_rejects_empty() {
        let empty = EigenContributions {
            md: Array2::zeros((0, 2)),
            rmd: Array2::zeros((0, 2)),
        };
        let one = EigenContributions {
            md: Array2::zeros((1, 2)),
            rmd: Array2::zeros((1, 2)),
        };
        assert!(summarize(&[1.0, 1.0], &empty, &one).is_err());
    }
}
