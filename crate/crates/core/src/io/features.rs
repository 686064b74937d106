use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{read_file, read_text, write_atomic};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Labels};

/// Magic bytes opening a raw float32 feature file.
pub const RAWF32_MAGIC: &[u8; 4] = b"OODS";
const RAWF32_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    Csv,
    Rawf32,
}

/// Describes one dataset on disk. Relative paths are resolved against the
/// directory of the manifest file when loaded with `DatasetManifest::from_file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub features_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_path: Option<PathBuf>,
    pub format: FeatureFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Zero-based CSV column holding integer labels, when labels live in the
    /// features file itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<usize>,
}

impl DatasetManifest {
    pub fn new(features_path: impl Into<PathBuf>, format: FeatureFormat) -> Self {
        DatasetManifest {
            features_path: features_path.into(),
            labels_path: None,
            format,
            n: None,
            dim: None,
            label_column: None,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut m: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.features_path = base.join(&m.features_path);
        m.labels_path = m.labels_path.map(|p| base.join(p));
        Ok(m)
    }

    /// A `.json` path is read as a manifest; anything else is taken as an
    /// unlabeled features file, rawf32 for `.f32`/`.bin`, CSV otherwise.
    pub fn resolve(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => DatasetManifest::from_file(path),
            Some("f32") | Some("bin") => Ok(DatasetManifest::new(path, FeatureFormat::Rawf32)),
            _ => Ok(DatasetManifest::new(path, FeatureFormat::Csv)),
        }
    }
}

fn parse_row(line: &str) -> Option<Vec<f64>> {
    line.split(',').map(|f| f.trim().parse::<f64>().ok()).collect()
}

/// Parses CSV text into rows, skipping a header line if the first line does
/// not parse as numbers. Returns the rows and, if `label_column` is set, the
/// labels split out of them.
fn parse_csv(text: &str, label_column: Option<usize>, origin: &str) -> Result<(Array2<f64>, Option<Vec<i64>>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    if let Some((_, first)) = lines.peek() {
        if parse_row(first).is_none() {
            lines.next();
        }
    }
    let mut flat = Vec::new();
    let mut labels = label_column.map(|_| Vec::new());
    let mut width = None;
    let mut n = 0;
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let mut row_width = 0;
        for (c, field) in fields.iter().enumerate() {
            if Some(c) == label_column {
                let l = field.parse::<i64>().map_err(|_| {
                    Error::input(format!("{origin}: line {}: label '{field}' is not an integer", lineno + 1))
                })?;
                labels.as_mut().expect("label column set").push(l);
                continue;
            }
            let v = field.parse::<f64>().map_err(|_| {
                Error::input(format!("{origin}: line {}, col {c}: '{field}' is not a number", lineno + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::input(format!(
                    "{origin}: non-finite value at row {n}, col {c}"
                )));
            }
            flat.push(v);
            row_width += 1;
        }
        if label_column.is_some_and(|lc| lc >= fields.len()) {
            return Err(Error::input(format!("{origin}: line {} has no label column", lineno + 1)));
        }
        match width {
            None => width = Some(row_width),
            Some(w) if w != row_width => {
                return Err(Error::input(format!(
                    "{origin}: line {} has {row_width} values, expected {w}",
                    lineno + 1
                )))
            }
            _ => {}
        }
        n += 1;
    }
    let data = Array2::from_shape_vec((n, width.unwrap_or(0)), flat).map_err(|e| Error::input(e.to_string()))?;
    Ok((data, labels))
}

/// Reads an unlabeled CSV feature file.
pub fn read_csv_features(path: &Path) -> Result<FeatureMatrix> {
    let (data, _) = parse_csv(&read_text(path)?, None, &path.display().to_string())?;
    FeatureMatrix::new(data)
}

/// Reads a rawf32 file: 16-byte header (`"OODS"`, u32 n, u32 dim, u32
/// reserved; little-endian) followed by `n*dim` little-endian f32 values.
pub fn read_rawf32(path: &Path) -> Result<Array2<f64>> {
    parse_rawf32(&read_file(path)?, &path.display().to_string())
}

fn parse_rawf32(bytes: &[u8], origin: &str) -> Result<Array2<f64>> {
    if bytes.len() < RAWF32_HEADER_LEN || &bytes[..4] != RAWF32_MAGIC {
        return Err(Error::Format(format!("{origin}: missing OODS magic")));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (n, dim) = (word(4), word(8));
    let payload = &bytes[RAWF32_HEADER_LEN..];
    let expected = n
        .checked_mul(dim)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("{origin}: header shape {n}x{dim} overflows")))?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "{origin}: header declares {n}x{dim} ({expected} bytes) but payload has {} bytes",
            payload.len()
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::input(format!(
            "{origin}: non-finite value at row {}, col {}",
            pos / dim,
            pos % dim
        )));
    }
    Array2::from_shape_vec((n, dim), values).map_err(|e| Error::input(e.to_string()))
}

/// Encodes `data` as rawf32 (values narrowed to f32).
pub fn write_rawf32(path: &Path, data: &Array2<f64>) -> Result<()> {
    let (n, dim) = data.dim();
    let mut bytes = Vec::with_capacity(RAWF32_HEADER_LEN + 4 * n * dim);
    bytes.extend_from_slice(RAWF32_MAGIC);
    for v in [n as u32, dim as u32, 0] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for &v in data.iter() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_atomic(path, &bytes)
}

/// Writes one row per sample with shortest round-trip decimal formatting.
pub fn write_csv_features(path: &Path, data: &Array2<f64>, labels: Option<&[i64]>) -> Result<()> {
    let mut out = String::new();
    for (i, row) in data.rows().into_iter().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = labels {
            fields.push(l[i].to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

fn read_label_file(path: &Path) -> Result<Vec<i64>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<i64>().map_err(|_| {
                Error::input(format!("{}: line {}: '{}' is not an integer label", path.display(), i + 1, l.trim()))
            })
        })
        .collect()
}

/// Loads the dataset a manifest points at, remapping labels to `0..K-1` in
/// order of first appearance.
pub fn load_features(manifest: &DatasetManifest) -> Result<FeatureMatrix> {
    let origin = manifest.features_path.display().to_string();
    let same_file_labels = manifest.label_column.is_some()
        && manifest.labels_path.as_ref().is_none_or(|p| p == &manifest.features_path);
    let (data, mut raw_labels) = match manifest.format {
        FeatureFormat::Csv => {
            let column = if same_file_labels { manifest.label_column } else { None };
            parse_csv(&read_text(&manifest.features_path)?, column, &origin)?
        }
        FeatureFormat::Rawf32 => {
            if manifest.label_column.is_some() {
                return Err(Error::input("label_column is only valid for CSV features"));
            }
            (read_rawf32(&manifest.features_path)?, None)
        }
    };
    let (n, dim) = data.dim();
    if manifest.n.is_some_and(|m| m != n) || manifest.dim.is_some_and(|m| m != dim) {
        return Err(Error::input(format!(
            "{origin}: manifest declares {}x{} but file holds {n}x{dim}",
            manifest.n.map_or("?".into(), |v| v.to_string()),
            manifest.dim.map_or("?".into(), |v| v.to_string()),
        )));
    }
    if !same_file_labels {
        if let Some(p) = &manifest.labels_path {
            raw_labels = Some(read_label_file(p)?);
        }
    }
    match raw_labels {
        Some(raw) => {
            if raw.len() != n {
                return Err(Error::input(format!("{origin}: {} labels for {n} rows", raw.len())));
            }
            FeatureMatrix::with_labels(data, Labels::from_raw(&raw))
        }
        None => FeatureMatrix::new(data),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn csv_plain_and_header() {
        let (m, l) = parse_csv("1.0,2.0\n3.0,4.0", None, "t").unwrap();
        assert_eq!(m, arr2(&[[1.0, 2.0], [3.0, 4.0]]));
        assert!(l.is_none());
        let (m, _) = parse_csv("a,b\n1,2\n", None, "t").unwrap();
        assert_eq!(m, arr2(&[[1.0, 2.0]]));
    }

    #[test]
    fn csv_label_column() {
        let (m, l) = parse_csv("x,y,label\n1,2,7\n3,4,9\n5,6,7\n", Some(2), "t").unwrap();
        assert_eq!(m, arr2(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]));
        assert_eq!(l.unwrap(), vec![7, 9, 7]);
    }

    #[test]
    fn csv_errors() {
        assert!(parse_csv("1,2\n3\n", None, "t").is_err());
        match parse_csv("1,2\n3,inf\n", None, "t") {
            Err(Error::Input(m)) => assert!(m.contains("row 1, col 1"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rawf32_header() {
        let mut bytes = b"OODS".to_vec();
        for v in [1u32, 3, 0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for v in [1.5f32, -2.0, 0.25] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(parse_rawf32(&bytes, "t").unwrap(), arr2(&[[1.5, -2.0, 0.25]]));

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(parse_rawf32(&bad, "t"), Err(Error::Format(_))));
        assert!(matches!(parse_rawf32(&bytes[..20], "t"), Err(Error::Format(_))));
    }
}
