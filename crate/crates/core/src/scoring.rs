//! Per-sample confidence scores. Every scorer returns "higher means more
//! in-distribution", i.e. negated distances.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::features::FeatureMatrix;
use crate::gaussian::GaussianSuite;
use crate::metrics::auroc_values;

/// Eigen-axes used by the partial Mahalanobis distance, 1-based over the
/// eigenvalues of `Σ` in descending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PmdIndexSet {
    /// `{1..d}`: the `d` largest eigenvalues.
    Head(usize),
    /// `{d+1..D}`: everything after the `d` largest.
    Tail(usize),
}

impl PmdIndexSet {
    /// Zero-based index range for a model of dimension `dim`.
    pub fn range(&self, dim: usize) -> Result<Range<usize>> {
        match *self {
            PmdIndexSet::Head(d) if (1..=dim).contains(&d) => Ok(0..d),
            PmdIndexSet::Tail(d) if d >= 1 && d < dim => Ok(d..dim),
            _ => Err(Error::input(format!(
                "PMD index set {self} is empty or out of range for dimension {dim}"
            ))),
        }
    }
}

impl fmt::Display for PmdIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PmdIndexSet::Head(d) => write!(f, "head({d})"),
            PmdIndexSet::Tail(d) => write!(f, "tail({d})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scorer {
    Md,
    Rmd,
    Mmd,
    Pmd(PmdIndexSet),
    Msp,
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scorer::Md => f.write_str("md"),
            Scorer::Rmd => f.write_str("rmd"),
            Scorer::Mmd => f.write_str("mmd"),
            Scorer::Msp => f.write_str("msp"),
            Scorer::Pmd(PmdIndexSet::Head(d)) => write!(f, "pmd-head-{d}"),
            Scorer::Pmd(PmdIndexSet::Tail(d)) => write!(f, "pmd-tail-{d}"),
        }
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::input(format!("unknown scorer '{s}'"));
        match s {
            "md" => Ok(Scorer::Md),
            "rmd" => Ok(Scorer::Rmd),
            "mmd" => Ok(Scorer::Mmd),
            "msp" => Ok(Scorer::Msp),
            _ => {
                let (sel, d) = s
                    .strip_prefix("pmd-head-")
                    .map(|d| (PmdIndexSet::Head as fn(usize) -> PmdIndexSet, d))
                    .or_else(|| s.strip_prefix("pmd-tail-").map(|d| (PmdIndexSet::Tail as fn(usize) -> PmdIndexSet, d)))
                    .ok_or_else(bad)?;
                Ok(Scorer::Pmd(sel(d.parse().map_err(|_| bad())?)))
            }
        }
    }
}

impl Serialize for Scorer {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scorer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Model-side parameters that influenced a score vector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_ridge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_ridge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmd_set: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub scorer: Scorer,
    pub model_fingerprint: String,
    pub params: ScoreParams,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn suite_vector(suite: &GaussianSuite, scorer: Scorer, scores: Vec<f64>) -> ScoreVector {
    let uses_shared = !matches!(scorer, Scorer::Mmd);
    let uses_background = matches!(scorer, Scorer::Rmd | Scorer::Mmd);
    ScoreVector {
        scores,
        scorer,
        model_fingerprint: suite.fingerprint().to_string(),
        params: ScoreParams {
            shared_ridge: uses_shared.then(|| suite.shared_factor().ridge()),
            background_ridge: uses_background.then(|| suite.background_factor().ridge()),
            pmd_set: match scorer {
                Scorer::Pmd(set) => Some(set.to_string()),
                _ => None,
            },
        },
    }
}

/// `MD_k(z)` for every class.
///
/// Computed as `‖L⁻¹(z-μ₀) - L⁻¹(μ_k-μ₀)‖²`, which equals
/// `(z-μ_k)ᵀ(Σ + ridge·I)⁻¹(z-μ_k)` with one triangular solve per sample
/// instead of one per class.
pub fn md_per_class(suite: &GaussianSuite, z: &[f64]) -> Result<Vec<f64>> {
    check_dim("md_per_class", suite.dim(), z.len())?;
    let mut y: Vec<f64> = z
        .iter()
        .zip(suite.background_mean())
        .map(|(a, m)| a - m)
        .collect();
    suite.shared_factor().forward_solve_in_place(&mut y);
    Ok(distances_to_rows(&y, suite.whitened_means()))
}

fn distances_to_rows(y: &[f64], rows: &Array2<f64>) -> Vec<f64> {
    rows.rows()
        .into_iter()
        .map(|w| y.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect()
}

/// `N x K` matrix of class distances `MD_k(z_i)`.
pub fn class_distances(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<Array2<f64>> {
    let mut centered = suite.centered(test)?;
    let k = suite.class_count();
    let mut out = Array2::zeros((test.n_samples(), k));
    for (i, mut row) in centered.rows_mut().into_iter().enumerate() {
        let y = row.as_slice_mut().expect("standard layout");
        suite.shared_factor().forward_solve_in_place(y);
        for (c, d) in distances_to_rows(y, suite.whitened_means()).into_iter().enumerate() {
            out[(i, c)] = d;
        }
    }
    Ok(out)
}

/// `MD_0(z_i)`, the distance to the background Gaussian.
pub fn background_distances(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<Vec<f64>> {
    let mut centered = suite.centered(test)?;
    Ok(centered
        .rows_mut()
        .into_iter()
        .map(|mut row| {
            let y = row.as_slice_mut().expect("standard layout");
            suite.background_factor().forward_solve_in_place(y);
            y.iter().map(|t| t * t).sum()
        })
        .collect())
}

fn row_min(row: ndarray::ArrayView1<'_, f64>) -> f64 {
    row.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `-min_k MD_k(z)`.
pub fn score_md(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<ScoreVector> {
    let md = class_distances(suite, test)?;
    let scores = md.rows().into_iter().map(|r| -row_min(r)).collect();
    Ok(suite_vector(suite, Scorer::Md, scores))
}

/// `-min_k (MD_k(z) - MD_0(z))`.
pub fn score_rmd(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<ScoreVector> {
    let md = class_distances(suite, test)?;
    let md0 = background_distances(suite, test)?;
    let scores = md
        .rows()
        .into_iter()
        .zip(&md0)
        .map(|(r, &m0)| -r.iter().map(|&m| m - m0).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(suite_vector(suite, Scorer::Rmd, scores))
}

/// `-MD_0(z)`.
pub fn score_mmd(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<ScoreVector> {
    let scores = background_distances(suite, test)?.into_iter().map(|m| -m).collect();
    Ok(suite_vector(suite, Scorer::Mmd, scores))
}

/// Projections `Vᵀ(z_i - μ₀)` onto the eigen-basis of the ridged `Σ`.
pub(crate) fn eigen_projections(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<Array2<f64>> {
    let spectrum = suite.spectrum()?;
    Ok(suite.centered(test)?.dot(spectrum.eigen.eigenvectors()))
}

/// `-min_k Σ_{d∈S} l_d²/λ_d` with `l = Vᵀ(z - μ_k)`.
pub fn score_pmd(suite: &GaussianSuite, test: &FeatureMatrix, set: PmdIndexSet) -> Result<ScoreVector> {
    let range = set.range(suite.dim())?;
    let spectrum = suite.spectrum()?;
    let lambda = &spectrum.eigen.eigenvalues()[range.clone()];
    let proj = eigen_projections(suite, test)?;
    let scores = proj
        .rows()
        .into_iter()
        .map(|p| {
            let p = &p.as_slice().expect("standard layout")[range.clone()];
            let best = spectrum
                .projected_means
                .rows()
                .into_iter()
                .map(|m| {
                    let m = &m.as_slice().expect("standard layout")[range.clone()];
                    p.iter()
                        .zip(m)
                        .zip(lambda)
                        .map(|((a, b), l)| (a - b) * (a - b) / l)
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            -best
        })
        .collect();
    Ok(suite_vector(suite, Scorer::Pmd(set), scores))
}

/// Maximum softmax probability of each row of `logits` (`N x K`, `K >= 2`).
pub fn score_msp(logits: &FeatureMatrix) -> Result<ScoreVector> {
    if logits.dim() < 2 {
        return Err(Error::input(format!(
            "MSP needs at least 2 logit columns, got {}",
            logits.dim()
        )));
    }
    let scores = logits
        .data()
        .rows()
        .into_iter()
        .map(|row| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            1.0 / row.iter().map(|&l| (l - max).exp()).sum::<f64>()
        })
        .collect();
    Ok(ScoreVector {
        scores,
        scorer: Scorer::Msp,
        model_fingerprint: logits.fingerprint(),
        params: ScoreParams::default(),
    })
}

/// Dispatches to the named Gaussian scorer. MSP needs logits, not a suite.
pub fn score(suite: &GaussianSuite, test: &FeatureMatrix, scorer: &Scorer) -> Result<ScoreVector> {
    match *scorer {
        Scorer::Md => score_md(suite, test),
        Scorer::Rmd => score_rmd(suite, test),
        Scorer::Mmd => score_mmd(suite, test),
        Scorer::Pmd(set) => score_pmd(suite, test, set),
        Scorer::Msp => Err(Error::input("msp scores logits; use score_msp")),
    }
}

/// AUROC of PMD for one cutoff `d`, for both selectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub lambda: f64,
    pub auroc_head: f64,
    /// `None` at `d = D`, where the tail set is empty.
    pub auroc_tail: Option<f64>,
}

/// PMD confidence for every head and tail cutoff, stored `D x N`:
/// `head[(d-1, i)]` uses `{1..d}`, `tail[(d-1, i)]` uses `{d+1..D}`.
fn pmd_all_cutoffs(suite: &GaussianSuite, test: &FeatureMatrix) -> Result<(Array2<f64>, Array2<f64>)> {
    let spectrum = suite.spectrum()?;
    let lambda = spectrum.eigen.eigenvalues();
    let dim = suite.dim();
    let proj = eigen_projections(suite, test)?;
    let n = test.n_samples();
    let mut head = Array2::zeros((dim, n));
    let mut tail = Array2::zeros((dim, n));
    let mut contrib = vec![0.0; dim];
    let mut head_min = vec![0.0; dim];
    let mut tail_min = vec![0.0; dim];
    for (i, p) in proj.rows().into_iter().enumerate() {
        head_min.fill(f64::INFINITY);
        tail_min.fill(f64::INFINITY);
        for m in spectrum.projected_means.rows() {
            for (d, c) in contrib.iter_mut().enumerate() {
                let l = p[d] - m[d];
                *c = l * l / lambda[d];
            }
            let mut acc = 0.0;
            for d in 0..dim {
                acc += contrib[d];
                head_min[d] = head_min[d].min(acc);
            }
            // tail_min[d-1] covers indices d..D (zero-based), so tail_min[D-1] stays empty
            let mut acc = 0.0;
            for d in (1..dim).rev() {
                acc += contrib[d];
                tail_min[d - 1] = tail_min[d - 1].min(acc);
            }
        }
        for d in 0..dim {
            head[(d, i)] = -head_min[d];
            tail[(d, i)] = -tail_min[d];
        }
    }
    Ok((head, tail))
}

/// AUROC of head- and tail-selected PMD for every cutoff `d = 1..D`.
pub fn pmd_sweep(suite: &GaussianSuite, ind: &FeatureMatrix, ood: &FeatureMatrix) -> Result<Vec<SweepRow>> {
    let (ind_head, ind_tail) = pmd_all_cutoffs(suite, ind)?;
    let (ood_head, ood_tail) = pmd_all_cutoffs(suite, ood)?;
    let lambda = suite.shared_eigen()?.eigenvalues();
    let dim = suite.dim();
    (0..dim)
        .map(|d| {
            let auroc_head = auroc_values(ind_head.row(d).as_slice().unwrap(), ood_head.row(d).as_slice().unwrap())?;
            let auroc_tail = if d + 1 < dim {
                Some(auroc_values(ind_tail.row(d).as_slice().unwrap(), ood_tail.row(d).as_slice().unwrap())?)
            } else {
                None
            };
            Ok(SweepRow {
                d: d + 1,
                lambda: lambda[d],
                auroc_head,
                auroc_tail,
            })
        })
        .collect()
}
