//! Binary model file.
//!
//! Layout (little-endian):
//!
//! ```text
//! "OODM" | u32 schema version | u64 header length | header JSON
//!        | f64 shared ridge | f64 background ridge
//!        | class means (K*D) | background mean (D)
//!        | shared covariance (D*D) | background covariance (D*D)
//!        | SHA-256 of all preceding bytes
//! ```
//!
//! Every matrix is stored as raw f64 bits, so a load reproduces it exactly.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::gaussian::GaussianSuite;
use crate::linalg::{RidgePolicy, SymMatrix};

pub const MODEL_MAGIC: &[u8; 4] = b"OODM";
pub const MODEL_SCHEMA_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

/// Provenance stored next to the statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub created_by: String,
    pub created_unix: u64,
    pub ridge_policy: RidgePolicy,
    /// `label_remap[k]` is the original label of class `k`.
    pub label_remap: Vec<i64>,
}

impl ModelMeta {
    pub fn now(ridge_policy: RidgePolicy, label_remap: Vec<i64>) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        ModelMeta {
            created_by: concat!("ood-scope ", env!("CARGO_PKG_VERSION")).to_string(),
            created_unix,
            ridge_policy,
            label_remap,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    dim: usize,
    classes: usize,
    class_counts: Vec<usize>,
    fingerprint: String,
    meta: ModelMeta,
}

#[derive(Debug, Clone)]
pub struct ModelFile {
    pub suite: GaussianSuite,
    pub meta: ModelMeta,
}

impl ModelFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let s = &self.suite;
        let header = Header {
            dim: s.dim(),
            classes: s.class_count(),
            class_counts: s.class_counts().to_vec(),
            fingerprint: s.fingerprint().to_string(),
            meta: self.meta.clone(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_SCHEMA_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
        put(s.shared_factor().ridge());
        put(s.background_factor().ridge());
        s.class_means().iter().for_each(|&v| put(v));
        s.background_mean().iter().for_each(|&v| put(v));
        s.shared_cov().view().iter().for_each(|&v| put(v));
        s.background_cov().view().iter().for_each(|&v| put(v));
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != MODEL_MAGIC {
            return Err(Error::Format("not an ood-scope model file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version > MODEL_SCHEMA_VERSION {
            return Err(Error::Version {
                found: version,
                supported: MODEL_SCHEMA_VERSION,
            });
        }
        if bytes.len() < 16 + CHECKSUM_LEN {
            return Err(Error::Checksum("model file truncated".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Checksum("model file is corrupt".into()));
        }
        let header_len = u64::from_le_bytes(body[8..16].try_into().expect("8 bytes")) as usize;
        let header_end = 16usize
            .checked_add(header_len)
            .filter(|&e| e <= body.len())
            .ok_or_else(|| Error::Format("header length exceeds file".into()))?;
        let header: Header = serde_json::from_slice(&body[16..header_end])
            .map_err(|e| Error::Format(format!("model header: {e}")))?;
        let (d, k) = (header.dim, header.classes);
        let payload = &body[header_end..];
        let expected = 8 * (2 + k * d + d + 2 * d * d);
        if payload.len() != expected {
            return Err(Error::Format(format!(
                "model payload has {} bytes, expected {expected} for D={d}, K={k}",
                payload.len()
            )));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut take = |count: usize| -> Vec<f64> { values.by_ref().take(count).collect() };
        let ridges = take(2);
        let class_means = Array2::from_shape_vec((k, d), take(k * d)).expect("sized");
        let background_mean = Array1::from(take(d));
        let shared_cov = Array2::from_shape_vec((d, d), take(d * d)).expect("sized");
        let background_cov = Array2::from_shape_vec((d, d), take(d * d)).expect("sized");
        let suite = GaussianSuite::from_parts(
            class_means,
            SymMatrix::new(shared_cov)?,
            ridges[0],
            background_mean,
            SymMatrix::new(background_cov)?,
            ridges[1],
            header.class_counts,
            header.fingerprint,
        )?;
        Ok(ModelFile {
            suite,
            meta: header.meta,
        })
    }
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    write_atomic(path, &model.to_bytes())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::from_bytes(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;
    use crate::gaussian::build_suite;

    fn model() -> ModelFile {
        let train = FeatureMatrix::labeled_from_rows(
            &[vec![0.0, 0.0], vec![2.0, 0.0], vec![4.0, 0.0], vec![6.0, 0.0]],
            &[0, 0, 1, 1],
        )
        .unwrap();
        ModelFile {
            suite: build_suite(&train, RidgePolicy::Default).unwrap(),
            meta: ModelMeta::now(RidgePolicy::Default, vec![10, 20]),
        }
    }

    #[test]
    fn round_trip_is_byte_identical_and_keeps_ridges() {
        let m = model();
        let bytes = m.to_bytes();
        let back = ModelFile::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.suite.shared_factor().ridge(), m.suite.shared_factor().ridge());
        assert_eq!(back.suite.background_factor().ridge(), m.suite.background_factor().ridge());
        assert_eq!(back.suite.shared_factor(), m.suite.shared_factor());
        assert_eq!(back.meta, m.meta);
    }

    #[test]
    fn corrupt_byte_fails_checksum() {
        let mut bytes = model().to_bytes();
        let i = bytes.len() - 40;
        bytes[i] ^= 1;
        assert!(matches!(ModelFile::from_bytes(&bytes), Err(Error::Checksum(_))));
    }

    #[test]
    fn newer_version_rejected() {
        let mut bytes = model().to_bytes();
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert_eq!(
            ModelFile::from_bytes(&bytes).unwrap_err(),
            Error::Version { found: 2, supported: 1 }
        );
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(ModelFile::from_bytes(b"OODSxxxxxxxxxxxxxxxx"), Err(Error::Format(_))));
    }
}
