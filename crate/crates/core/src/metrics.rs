//! AUROC between IND and OOD confidence scores, and score histograms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gaussian::GaussianSuite;
use crate::scoring::{score, ScoreParams, ScoreVector, Scorer};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const HISTOGRAM_BINS: usize = 50;

/// Mann-Whitney AUROC: the fraction of (ind, ood) pairs where the IND score
/// is higher, ties counting one half.
///
/// Ranks are kept doubled so every tie-averaged rank is an integer and the
/// U statistic is exact.
pub fn auroc_values(ind: &[f64], ood: &[f64]) -> Result<f64> {
    if ind.is_empty() || ood.is_empty() {
        return Err(Error::input(format!(
            "AUROC needs non-empty score sets (got {} IND, {} OOD)",
            ind.len(),
            ood.len()
        )));
    }
    for (name, set) in [("IND", ind), ("OOD", ood)] {
        if let Some(i) = set.iter().position(|v| v.is_nan()) {
            return Err(Error::input(format!("{name} score at index {i} is NaN")));
        }
    }
    let mut pooled: Vec<(f64, bool)> = ind
        .iter()
        .map(|&s| (s, true))
        .chain(ood.iter().map(|&s| (s, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    // sum of doubled ranks of IND samples
    let mut ind_rank2: u128 = 0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // ranks i+1..=j+1 average to (i + j + 2) / 2
        let rank2 = (i + j + 2) as u128;
        let n_ind = pooled[i..=j].iter().filter(|p| p.1).count() as u128;
        ind_rank2 += rank2 * n_ind;
        i = j + 1;
    }
    let (n1, n2) = (ind.len() as u128, ood.len() as u128);
    let u2 = ind_rank2 - n1 * (n1 + 1);
    Ok(u2 as f64 / (2 * n1 * n2) as f64)
}

/// AUROC of two score vectors. Mismatched scorers or models are logged, not
/// rejected.
pub fn auroc(ind: &ScoreVector, ood: &ScoreVector) -> Result<f64> {
    for w in compatibility_warnings(ind, ood) {
        log::warn!("{w}");
    }
    auroc_values(&ind.scores, &ood.scores)
}

pub fn compatibility_warnings(ind: &ScoreVector, ood: &ScoreVector) -> Vec<String> {
    let mut out = Vec::new();
    if ind.scorer != ood.scorer {
        out.push(format!(
            "scorer mismatch: IND scored with {}, OOD with {}",
            ind.scorer, ood.scorer
        ));
    }
    if ind.model_fingerprint != ood.model_fingerprint {
        out.push(format!(
            "model fingerprint mismatch: IND {}, OOD {}",
            ind.model_fingerprint, ood.model_fingerprint
        ));
    }
    out
}

/// Equal-width histogram; `edges` has one more entry than `counts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Histograms of both sets over their joint range.
pub fn joint_histograms(a: &[f64], b: &[f64], bins: usize) -> (Histogram, Histogram) {
    let (mut lo, mut hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let count = |xs: &[f64]| {
        let mut counts = vec![0u64; bins];
        for &x in xs {
            let idx = (((x - lo) / width).floor() as isize).clamp(0, bins as isize - 1);
            counts[idx as usize] += 1;
        }
        Histogram {
            edges: edges.clone(),
            counts,
        }
    };
    (count(a), count(b))
}

/// AUROC and score histograms for one IND/OOD pair under one scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub auroc: f64,
    pub n_ind: usize,
    pub n_ood: usize,
    pub scorer: String,
    pub model_fingerprint: String,
    pub params: ScoreParams,
    pub ind_hist: Histogram,
    pub ood_hist: Histogram,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Builds the report from already computed score vectors.
pub fn evaluate_scores(ind: &ScoreVector, ood: &ScoreVector) -> Result<EvalReport> {
    let warnings = compatibility_warnings(ind, ood);
    for w in &warnings {
        log::warn!("{w}");
    }
    let value = auroc_values(&ind.scores, &ood.scores)?;
    let (ind_hist, ood_hist) = joint_histograms(&ind.scores, &ood.scores, HISTOGRAM_BINS);
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        auroc: value,
        n_ind: ind.scores.len(),
        n_ood: ood.scores.len(),
        scorer: ind.scorer.to_string(),
        model_fingerprint: ind.model_fingerprint.clone(),
        params: ind.params.clone(),
        ind_hist,
        ood_hist,
        warnings,
    })
}

/// Scores both test sets with `scorer` and evaluates them.
pub fn evaluate(
    suite: &GaussianSuite,
    ind_test: &FeatureMatrix,
    ood_test: &FeatureMatrix,
    scorer: &Scorer,
) -> Result<EvalReport> {
    let ind = score(suite, ind_test, scorer)?;
    let ood = score(suite, ood_test, scorer)?;
    evaluate_scores(&ind, &ood)
}
