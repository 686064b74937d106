//! File formats: feature ingestion, model files, score files and reports.
//! All writes go to a temporary sibling file that is renamed into place.

mod features;
mod model;
mod report;
mod scores;

pub use features::{load_features, read_csv_features, read_rawf32, write_csv_features, write_rawf32, DatasetManifest, FeatureFormat, RAWF32_MAGIC};
pub use model::{load_model, save_model, ModelFile, ModelMeta, MODEL_MAGIC, MODEL_SCHEMA_VERSION};
pub use report::{eigen_report_csv, sweep_csv, write_json};
pub(crate) use report::write_text;
pub use scores::{parse_scores, read_scores, scores_to_csv, write_scores};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::input(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
