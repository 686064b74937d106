use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::write_atomic;
use crate::eigen_analysis::{EigenReport, SPLIT_GAP_FRACTION};
use crate::error::Result;
use crate::scoring::SweepRow;

/// Pretty JSON to `path`, or stdout when `path` is `None`.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

/// One row per eigen-axis: `d, lambda`, then mean/q10/q90 of IND MD, OOD MD,
/// IND RMD and OOD RMD.
pub fn eigen_report_csv(report: &EigenReport) -> String {
    let mut out = format!(
        "# suggested_split={} (heuristic: mean OOD-IND MD gap below {SPLIT_GAP_FRACTION} of max from here on)\n",
        report.suggested_split
    );
    out.push_str(
        "d,lambda,ind_md_mean,ind_md_q10,ind_md_q90,ood_md_mean,ood_md_q10,ood_md_q90,\
         ind_rmd_mean,ind_rmd_q10,ind_rmd_q90,ood_rmd_mean,ood_rmd_q10,ood_rmd_q90\n",
    );
    for s in &report.per_dim {
        let stats = [s.ind_md, s.ood_md, s.ind_rmd, s.ood_rmd];
        let mut fields = vec![s.d.to_string(), format!("{:.16e}", s.lambda)];
        for c in stats {
            fields.extend([c.mean, c.q10, c.q90].iter().map(|v| format!("{v:.16e}")));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// `d, lambda, auroc_head, auroc_tail`; the tail column is empty at `d = D`.
pub fn sweep_csv(rows: &[SweepRow], reference: &[(&str, f64)]) -> String {
    let mut out = String::new();
    for (name, v) in reference {
        out.push_str(&format!("# {name}={v:.16e}\n"));
    }
    out.push_str("d,lambda,auroc_head,auroc_tail\n");
    for r in rows {
        let tail = r.auroc_tail.map_or(String::new(), |v| format!("{v:.16e}"));
        out.push_str(&format!("{},{:.16e},{:.16e},{tail}\n", r.d, r.lambda, r.auroc_head));
    }
    out
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}
