//! Embedding matrices with optional dense class labels.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense class labels `0..K-1` together with the original label values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    ids: Vec<usize>,
    /// `original[k]` is the raw label that was mapped to class `k`.
    original: Vec<i64>,
}

impl Labels {
    /// Remaps raw labels to `0..K-1` in order of first appearance.
    pub fn from_raw(raw: &[i64]) -> Self {
        let mut index = HashMap::new();
        let mut original = Vec::new();
        let ids = raw
            .iter()
            .map(|&l| {
                *index.entry(l).or_insert_with(|| {
                    original.push(l);
                    original.len() - 1
                })
            })
            .collect();
        Labels { ids, original }
    }

    /// Labels that are already dense class ids; `class_count` may exceed
    /// the largest id present.
    pub fn from_dense(ids: Vec<usize>, class_count: usize) -> Result<Self> {
        if let Some((i, &bad)) = ids.iter().enumerate().find(|(_, &l)| l >= class_count) {
            return Err(Error::input(format!(
                "label {bad} at row {i} outside [0, {class_count})"
            )));
        }
        Ok(Labels {
            ids,
            original: (0..class_count as i64).collect(),
        })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn original(&self) -> &[i64] {
        &self.original
    }

    pub fn class_count(&self) -> usize {
        self.original.len()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// `N x D` embeddings, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
    labels: Option<Labels>,
}

impl FeatureMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let d = data.ncols().max(1);
            return Err(Error::input(format!(
                "non-finite feature value at row {}, col {}",
                pos / d,
                pos % d
            )));
        }
        Ok(FeatureMatrix { data, labels: None })
    }

    pub fn with_labels(data: Array2<f64>, labels: Labels) -> Result<Self> {
        if labels.len() != data.nrows() {
            return Err(Error::input(format!(
                "{} labels for {} rows",
                labels.len(),
                data.nrows()
            )));
        }
        let mut m = FeatureMatrix::new(data)?;
        m.labels = Some(labels);
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        FeatureMatrix::new(rows_to_array(rows)?)
    }

    pub fn labeled_from_rows(rows: &[Vec<f64>], labels: &[usize]) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        FeatureMatrix::with_labels(rows_to_array(rows)?, Labels::from_dense(labels.to_vec(), k)?)
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn class_count(&self) -> Option<usize> {
        self.labels.as_ref().map(Labels::class_count)
    }

    pub fn without_labels(&self) -> FeatureMatrix {
        FeatureMatrix {
            data: self.data.clone(),
            labels: None,
        }
    }

    /// Rows selected by index, labels carried along.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let data = self.data.select(ndarray::Axis(0), rows);
        let labels = self.labels.as_ref().map(|l| Labels {
            ids: rows.iter().map(|&r| l.ids[r]).collect(),
            original: l.original.clone(),
        });
        FeatureMatrix { data, labels }
    }

    /// Content hash over the shape, the dense labels and the raw data bytes.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"ood-scope/features/v1");
        h.update((self.n_samples() as u64).to_le_bytes());
        h.update((self.dim() as u64).to_le_bytes());
        match &self.labels {
            Some(l) => {
                h.update((l.class_count() as u64).to_le_bytes());
                for &id in &l.ids {
                    h.update((id as u64).to_le_bytes());
                }
            }
            None => h.update(0u64.to_le_bytes()),
        }
        for v in self.data.iter() {
            h.update(v.to_le_bytes());
        }
        hex_prefix(&h.finalize(), 16)
    }
}

pub(crate) fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes.iter().take(n).map(|b| format!("{b:02x}")).collect()
}

fn rows_to_array(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::input(format!(
            "row {i} has length {}, expected {d}",
            rows[i].len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), d), flat).map_err(|e| Error::input(e.to_string()))
}
