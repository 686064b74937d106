//! Score CSV: `#`-prefixed provenance lines, then `index,score` rows with
//! scores printed to 17 significant digits.

use std::path::Path;

use super::{read_text, write_atomic};
use crate::error::{Error, Result};
use crate::scoring::{ScoreParams, ScoreVector};

pub fn scores_to_csv(v: &ScoreVector) -> String {
    let params = serde_json::to_string(&v.params).expect("params serialize");
    let mut out = format!(
        "# ood-scope scores v1\n# scorer={}\n# model_fingerprint={}\n# params={params}\nindex,score\n",
        v.scorer, v.model_fingerprint
    );
    for (i, s) in v.scores.iter().enumerate() {
        out.push_str(&format!("{i},{s:.16e}\n"));
    }
    out
}

pub fn parse_scores(text: &str, origin: &str) -> Result<ScoreVector> {
    let mut scorer = None;
    let mut fingerprint = None;
    let mut params = ScoreParams::default();
    let mut scores = Vec::new();
    let mut seen_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let at = || format!("{origin}: line {}", lineno + 1);
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(s) = meta.strip_prefix("scorer=") {
                scorer = Some(s.parse()?);
            } else if let Some(f) = meta.strip_prefix("model_fingerprint=") {
                fingerprint = Some(f.to_string());
            } else if let Some(p) = meta.strip_prefix("params=") {
                params = serde_json::from_str(p).map_err(|e| Error::Format(format!("{}: {e}", at())))?;
            }
            continue;
        }
        if !seen_header {
            seen_header = true;
            if line == "index,score" {
                continue;
            }
        }
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("{}: expected 'index,score'", at())))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("{}: bad index '{idx}'", at())))?;
        if idx != scores.len() {
            return Err(Error::Format(format!("{}: index {idx} out of order", at())));
        }
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("{}: bad score '{val}'", at())))?;
        if val.is_nan() {
            return Err(Error::input(format!("{origin}: score at index {idx} is NaN")));
        }
        scores.push(val);
    }
    Ok(ScoreVector {
        scores,
        scorer: scorer.ok_or_else(|| Error::Format(format!("{origin}: missing '# scorer=' line")))?,
        model_fingerprint: fingerprint.unwrap_or_default(),
        params,
    })
}

pub fn write_scores(path: &Path, v: &ScoreVector) -> Result<()> {
    write_atomic(path, scores_to_csv(v).as_bytes())
}

pub fn read_scores(path: &Path) -> Result<ScoreVector> {
    parse_scores(&read_text(path)?, &path.display().to_string())
}
