//! Class-conditional Gaussians with a shared covariance, plus the
//! label-free background Gaussian fitted to the same training rows.

use std::sync::OnceLock;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{check_dim, Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{
    eigh_labeled, spd_factorize, EigenDecomposition, RidgePolicy, SpdFactorization, SymMatrix,
};

/// Rows per block when accumulating scatter matrices. Fixed so the
/// summation order does not depend on anything but the input.
const SCATTER_BLOCK: usize = 512;

/// `Σ_i (z_i - c_i)(z_i - c_i)ᵀ / N`, where `center(i)` picks the mean row `i` is
/// centered on.
fn scatter<'a>(data: ArrayView2<'_, f64>, center: impl Fn(usize) -> ArrayView1<'a, f64>) -> Array2<f64> {
    let (n, d) = data.dim();
    let mut acc = Array2::<f64>::zeros((d, d));
    let mut block = Array2::<f64>::zeros((SCATTER_BLOCK.min(n), d));
    let mut start = 0;
    while start < n {
        let end = (start + SCATTER_BLOCK).min(n);
        let rows = end - start;
        for (r, i) in (start..end).enumerate() {
            let mut dst = block.row_mut(r);
            dst.assign(&data.row(i));
            dst -= &center(i);
        }
        let b = block.slice(s![..rows, ..]);
        ndarray::linalg::general_mat_mul(1.0, &b.t(), &b, 1.0, &mut acc);
        start = end;
    }
    acc /= n as f64;
    acc
}

/// Per-class means `μ_k` and the pooled within-class covariance `Σ`
/// (normalized by the total sample count `N`).
pub fn fit_class_conditional(train: &FeatureMatrix) -> Result<(Array2<f64>, SymMatrix)> {
    let labels = train
        .labels()
        .ok_or_else(|| Error::input("class-conditional fit requires labels"))?;
    let (n, d) = (train.n_samples(), train.dim());
    if n == 0 || d == 0 {
        return Err(Error::input("training matrix is empty"));
    }
    let k = labels.class_count();
    let mut counts = vec![0usize; k];
    let mut means = Array2::<f64>::zeros((k, d));
    for (i, &c) in labels.ids().iter().enumerate() {
        counts[c] += 1;
        let mut m = means.row_mut(c);
        m += &train.row(i);
    }
    for (c, &nc) in counts.iter().enumerate() {
        if nc == 0 {
            return Err(Error::input(format!(
                "class {c} (label {}) has no training samples",
                labels.original()[c]
            )));
        }
        let mut m = means.row_mut(c);
        m /= nc as f64;
    }
    let ids = labels.ids();
    let cov = scatter(train.data(), |i| means.row(ids[i]));
    Ok((means, SymMatrix::new(cov)?))
}

/// Mean `μ₀` and covariance `Σ₀` of all training rows, labels ignored.
pub fn fit_background(train: &FeatureMatrix) -> Result<(Array1<f64>, SymMatrix)> {
    let (n, d) = (train.n_samples(), train.dim());
    if n == 0 || d == 0 {
        return Err(Error::input("training matrix is empty"));
    }
    let mut mean = Array1::<f64>::zeros(d);
    for row in train.data().rows() {
        mean += &row;
    }
    mean /= n as f64;
    let cov = scatter(train.data(), |_| mean.view());
    Ok((mean, SymMatrix::new(cov)?))
}

/// Eigen-basis of the ridged shared covariance and the quantities derived
/// from it, computed on first use.
#[derive(Debug, Clone)]
pub(crate) struct Spectrum {
    /// Decomposition of `Σ + ridge·I`.
    pub eigen: EigenDecomposition,
    /// Row k: `Vᵀ(μ_k - μ₀)`.
    pub projected_means: Array2<f64>,
    /// `v_dᵀ(Σ₀ + ridge₀·I)v_d`, the background variance along each eigen-axis.
    pub background_var: Vec<f64>,
}

/// The fitted model: `K` class Gaussians `N(μ_k, Σ)` and the background `N(μ₀, Σ₀)`.
#[derive(Debug)]
pub struct GaussianSuite {
    class_means: Array2<f64>,
    shared_cov: SymMatrix,
    shared_factor: SpdFactorization,
    background_mean: Array1<f64>,
    background_cov: SymMatrix,
    background_factor: SpdFactorization,
    class_counts: Vec<usize>,
    fingerprint: String,
    // row k: L⁻¹(μ_k - μ₀) with L the shared factor
    whitened_means: Array2<f64>,
    spectrum: OnceLock<Result<Spectrum>>,
}

impl Clone for GaussianSuite {
    fn clone(&self) -> Self {
        GaussianSuite {
            class_means: self.class_means.clone(),
            shared_cov: self.shared_cov.clone(),
            shared_factor: self.shared_factor.clone(),
            background_mean: self.background_mean.clone(),
            background_cov: self.background_cov.clone(),
            background_factor: self.background_factor.clone(),
            class_counts: self.class_counts.clone(),
            fingerprint: self.fingerprint.clone(),
            whitened_means: self.whitened_means.clone(),
            spectrum: self.spectrum.clone(),
        }
    }
}

/// Fits both Gaussians and factorizes both covariances under `ridge_policy`.
pub fn build_suite(train: &FeatureMatrix, ridge_policy: RidgePolicy) -> Result<GaussianSuite> {
    let (class_means, shared_cov) = fit_class_conditional(train)?;
    let (background_mean, background_cov) = fit_background(train)?;
    let shared_factor = spd_factorize(&shared_cov, ridge_policy).map_err(|e| context(e, "shared covariance"))?;
    let background_factor =
        spd_factorize(&background_cov, ridge_policy).map_err(|e| context(e, "background covariance"))?;
    for (name, f) in [("shared", &shared_factor), ("background", &background_factor)] {
        if f.ridge() > 0.0 {
            log::warn!("{name} covariance is singular; applied ridge {:e}", f.ridge());
        }
    }
    let mut class_counts = vec![0; class_means.nrows()];
    for &c in train.labels().expect("checked by fit").ids() {
        class_counts[c] += 1;
    }
    GaussianSuite::assemble(
        class_means,
        shared_cov,
        shared_factor,
        background_mean,
        background_cov,
        background_factor,
        class_counts,
        train.fingerprint(),
    )
}

fn context(e: Error, what: &str) -> Error {
    match e {
        Error::Numerical(m) => Error::Numerical(format!("{what}: {m}")),
        Error::Input(m) => Error::Input(format!("{what}: {m}")),
        other => other,
    }
}

impl GaussianSuite {
    /// Rebuilds a suite from stored statistics, refactorizing each covariance
    /// with exactly the recorded ridge.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        class_means: Array2<f64>,
        shared_cov: SymMatrix,
        shared_ridge: f64,
        background_mean: Array1<f64>,
        background_cov: SymMatrix,
        background_ridge: f64,
        class_counts: Vec<usize>,
        fingerprint: String,
    ) -> Result<Self> {
        let d = shared_cov.dim();
        check_dim("class means", d, class_means.ncols())?;
        check_dim("background mean", d, background_mean.len())?;
        check_dim("background covariance", d, background_cov.dim())?;
        if class_counts.len() != class_means.nrows() || class_means.nrows() == 0 {
            return Err(Error::input(format!(
                "{} class counts for {} class means",
                class_counts.len(),
                class_means.nrows()
            )));
        }
        let shared_factor =
            SpdFactorization::with_ridge(&shared_cov, shared_ridge).map_err(|e| context(e, "shared covariance"))?;
        let background_factor = SpdFactorization::with_ridge(&background_cov, background_ridge)
            .map_err(|e| context(e, "background covariance"))?;
        GaussianSuite::assemble(
            class_means,
            shared_cov,
            shared_factor,
            background_mean,
            background_cov,
            background_factor,
            class_counts,
            fingerprint,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        class_means: Array2<f64>,
        shared_cov: SymMatrix,
        shared_factor: SpdFactorization,
        background_mean: Array1<f64>,
        background_cov: SymMatrix,
        background_factor: SpdFactorization,
        class_counts: Vec<usize>,
        fingerprint: String,
    ) -> Result<Self> {
        let mut whitened_means = &class_means - &background_mean.view().insert_axis(Axis(0));
        for mut row in whitened_means.rows_mut() {
            shared_factor.forward_solve_in_place(row.as_slice_mut().expect("standard layout"));
        }
        Ok(GaussianSuite {
            class_means,
            shared_cov,
            shared_factor,
            background_mean,
            background_cov,
            background_factor,
            class_counts,
            fingerprint,
            whitened_means,
            spectrum: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.shared_cov.dim()
    }

    pub fn class_count(&self) -> usize {
        self.class_means.nrows()
    }

    pub fn class_means(&self) -> &Array2<f64> {
        &self.class_means
    }

    pub fn shared_cov(&self) -> &SymMatrix {
        &self.shared_cov
    }

    pub fn shared_factor(&self) -> &SpdFactorization {
        &self.shared_factor
    }

    pub fn background_mean(&self) -> &Array1<f64> {
        &self.background_mean
    }

    pub fn background_cov(&self) -> &SymMatrix {
        &self.background_cov
    }

    pub fn background_factor(&self) -> &SpdFactorization {
        &self.background_factor
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub(crate) fn whitened_means(&self) -> &Array2<f64> {
        &self.whitened_means
    }

    /// Eigendecomposition of the ridged shared covariance (descending).
    pub fn shared_eigen(&self) -> Result<&EigenDecomposition> {
        self.spectrum().map(|s| &s.eigen)
    }

    pub(crate) fn spectrum(&self) -> Result<&Spectrum> {
        self.spectrum
            .get_or_init(|| self.compute_spectrum())
            .as_ref()
            .map_err(Clone::clone)
    }

    fn compute_spectrum(&self) -> Result<Spectrum> {
        let eigen = eigh_labeled(&self.shared_cov, "shared covariance")?.shifted(self.shared_factor.ridge());
        if let Some((d, l)) = eigen.eigenvalues().iter().enumerate().find(|(_, &l)| l.is_nan() || l <= 0.0) {
            return Err(Error::numerical(format!(
                "ridged shared covariance has non-positive eigenvalue {l:e} at index {}",
                d + 1
            )));
        }
        let v = eigen.eigenvectors();
        let centered = &self.class_means - &self.background_mean.view().insert_axis(Axis(0));
        let projected_means = centered.dot(v);

        // background variance along v_d, written as λ_d + v_dᵀ(Σ₀ - Σ)v_d + (r₀ - r)
        let delta = &self.background_cov.view() - &self.shared_cov.view();
        let delta_v = delta.dot(v);
        let ridge_shift = self.background_factor.ridge() - self.shared_factor.ridge();
        let background_var: Vec<f64> = eigen
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(d, &lambda)| lambda + v.column(d).dot(&delta_v.column(d)) + ridge_shift)
            .collect();
        if let Some((d, s)) = background_var.iter().enumerate().find(|(_, &s)| s.is_nan() || s <= 0.0) {
            return Err(Error::numerical(format!(
                "background variance along eigen-axis {} is non-positive ({s:e})",
                d + 1
            )));
        }
        Ok(Spectrum {
            eigen,
            projected_means,
            background_var,
        })
    }

    /// Rows of `test` centered on `μ₀`, after checking the dimension.
    pub(crate) fn centered(&self, test: &FeatureMatrix) -> Result<Array2<f64>> {
        check_dim("test features vs model", self.dim(), test.dim())?;
        Ok(&test.data() - &self.background_mean.view().insert_axis(Axis(0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn four_points() -> FeatureMatrix {
        FeatureMatrix::labeled_from_rows(
            &[vec![0.0, 0.0], vec![2.0, 0.0], vec![4.0, 0.0], vec![6.0, 0.0]],
            &[0, 0, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn class_conditional_four_points() {
        let (means, cov) = fit_class_conditional(&four_points()).unwrap();
        assert_eq!(means, arr2(&[[1.0, 0.0], [5.0, 0.0]]));
        assert_eq!(cov.view(), arr2(&[[1.0, 0.0], [0.0, 0.0]]));
    }

    #[test]
    fn background_four_points() {
        let (mean, cov) = fit_background(&four_points()).unwrap();
        assert_eq!(mean.to_vec(), vec![3.0, 0.0]);
        assert_eq!(cov.view(), arr2(&[[5.0, 0.0], [0.0, 0.0]]));
    }

    #[test]
    fn one_sample_per_class_gives_zero_scatter() {
        let train =
            FeatureMatrix::labeled_from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]], &[0, 1]).unwrap();
        let (_, cov) = fit_class_conditional(&train).unwrap();
        assert!(cov.view().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_samples() {
        let rows = vec![vec![1.5, -2.0]; 4];
        let train = FeatureMatrix::labeled_from_rows(&rows, &[0, 1, 0, 1]).unwrap();
        let (means, cov) = fit_class_conditional(&train).unwrap();
        assert_eq!(means.row(0), means.row(1));
        assert!(cov.view().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_row_background() {
        let train = FeatureMatrix::from_rows(&[vec![2.0, -1.0, 0.5]]).unwrap();
        let (mean, cov) = fit_background(&train).unwrap();
        assert_eq!(mean.to_vec(), vec![2.0, -1.0, 0.5]);
        assert!(cov.view().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_data_has_zero_mean() {
        let train = FeatureMatrix::from_rows(&[vec![1.0, -2.0], vec![-1.0, 2.0]]).unwrap();
        let (mean, _) = fit_background(&train).unwrap();
        assert_eq!(mean.to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn missing_labels_and_empty_class() {
        let unlabeled = FeatureMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(fit_class_conditional(&unlabeled), Err(Error::Input(_))));

        let data = ndarray::arr2(&[[1.0], [2.0]]);
        let labels = crate::features::Labels::from_dense(vec![0, 2], 3).unwrap();
        let train = FeatureMatrix::with_labels(data, labels).unwrap();
        match fit_class_conditional(&train) {
            Err(Error::Input(m)) => assert!(m.contains("class 1"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_background_is_input_error() {
        let train = FeatureMatrix::new(Array2::zeros((0, 3))).unwrap();
        assert!(matches!(fit_background(&train), Err(Error::Input(_))));
    }

    #[test]
    fn four_point_suite_is_ridged() {
        let suite = build_suite(&four_points(), RidgePolicy::Default).unwrap();
        assert!(suite.shared_factor().ridge() > 0.0);
        assert!(suite.background_factor().ridge() > 0.0);
        assert_eq!(suite.class_counts(), &[2, 2]);
        assert!(build_suite(&four_points(), RidgePolicy::None).is_err());
    }

    #[test]
    fn single_class_fits_coincide() {
        let rows = vec![vec![0.3, 1.0], vec![-1.2, 0.7], vec![2.5, -0.1], vec![0.4, 0.4]];
        let train = FeatureMatrix::labeled_from_rows(&rows, &[0, 0, 0, 0]).unwrap();
        let suite = build_suite(&train, RidgePolicy::Default).unwrap();
        assert_eq!(suite.class_means().row(0), suite.background_mean().view());
        assert_eq!(suite.shared_cov(), suite.background_cov());
    }
}
