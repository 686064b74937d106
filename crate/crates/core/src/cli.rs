//! The `ood-scope` command line. Each subcommand is one stage of the
//! fit → score → evaluate pipeline, or a diagnostic built on it.
//!
//! Exit codes: 0 success, 1 input/format errors, 2 numerical errors.
//! Machine-readable JSON goes to stdout (or `--out`), a human summary to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::eigen_analysis::eigen_report;
use crate::error::{Error, Result};
use crate::io::{
    eigen_report_csv, load_features, load_model, read_scores, save_model, sweep_csv, write_json, write_scores,
    write_text, DatasetManifest, ModelFile, ModelMeta,
};
use crate::linalg::RidgePolicy;
use crate::metrics::{auroc_values, evaluate, evaluate_scores, EvalReport};
use crate::scoring::{pmd_sweep, score, score_md, score_msp, score_rmd, PmdIndexSet, Scorer};
use crate::simulation::{run_study, SimConfig};
use crate::FeatureMatrix;

#[derive(Debug, Parser)]
#[command(name = "ood-scope", version, about = "Mahalanobis / relative Mahalanobis OOD scoring for embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScorerName {
    Md,
    Rmd,
    Mmd,
    Pmd,
}

#[derive(Debug, Args)]
struct ScorerArgs {
    #[arg(long, value_enum)]
    scorer: Option<ScorerName>,
    /// PMD over the d largest eigenvalues
    #[arg(long, value_name = "D", conflicts_with = "pmd_tail")]
    pmd_head: Option<usize>,
    /// PMD over all but the d largest eigenvalues
    #[arg(long, value_name = "D")]
    pmd_tail: Option<usize>,
}

impl ScorerArgs {
    fn resolve(&self) -> Result<Scorer> {
        let name = self.scorer.ok_or_else(|| Error::input("--scorer is required"))?;
        let set = match (self.pmd_head, self.pmd_tail) {
            (Some(d), None) => Some(PmdIndexSet::Head(d)),
            (None, Some(d)) => Some(PmdIndexSet::Tail(d)),
            _ => None,
        };
        match (name, set) {
            (ScorerName::Pmd, Some(set)) => Ok(Scorer::Pmd(set)),
            (ScorerName::Pmd, None) => Err(Error::input("--scorer pmd needs --pmd-head or --pmd-tail")),
            (_, Some(_)) => Err(Error::input("--pmd-head/--pmd-tail only apply to --scorer pmd")),
            (ScorerName::Md, None) => Ok(Scorer::Md),
            (ScorerName::Rmd, None) => Ok(Scorer::Rmd),
            (ScorerName::Mmd, None) => Ok(Scorer::Mmd),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit class-conditional and background Gaussians to labeled embeddings
    Fit {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "default", value_parser = parse_ridge_policy)]
        ridge_policy: RidgePolicy,
    },
    /// Score embeddings against a fitted model
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum softmax probability from logits
    ScoreMsp {
        #[arg(long)]
        logits: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// AUROC between IND and OOD scores (from score files, or one-shot from a model)
    Eval {
        #[arg(long, requires = "ood", conflicts_with_all = ["model", "ind_data", "ood_data"])]
        ind: Option<PathBuf>,
        #[arg(long, requires = "ind")]
        ood: Option<PathBuf>,
        #[arg(long, requires_all = ["ind_data", "ood_data"])]
        model: Option<PathBuf>,
        #[arg(long)]
        ind_data: Option<PathBuf>,
        #[arg(long)]
        ood_data: Option<PathBuf>,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-eigen-axis MD/RMD statistics as CSV
    Eigen {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        ind_data: PathBuf,
        #[arg(long)]
        ood_data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// PMD AUROC for every head/tail cutoff as CSV
    PmdSweep {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        ind_data: PathBuf,
        #[arg(long)]
        ood_data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the synthetic Gaussian failure-mode study
    Simulate {
        /// JSON config; absent keys take their defaults
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn parse_ridge_policy(s: &str) -> std::result::Result<RidgePolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_dataset(path: &Path) -> Result<FeatureMatrix> {
    load_features(&DatasetManifest::resolve(path)?)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Fit {
            train,
            out,
            ridge_policy,
        } => fit(&train, &out, ridge_policy),
        Command::Score {
            model,
            data,
            scorer,
            out,
        } => {
            let model = load_model(&model)?;
            let test = load_dataset(&data)?;
            let scores = score(&model.suite, &test, &scorer.resolve()?)?;
            write_scores(&out, &scores)?;
            eprintln!("scored {} samples with {}", scores.len(), scores.scorer);
            print_json(&json!({
                "out": out,
                "n": scores.len(),
                "scorer": scores.scorer,
                "model_fingerprint": scores.model_fingerprint,
            }))
        }
        Command::ScoreMsp { logits, out } => {
            let scores = score_msp(&load_dataset(&logits)?)?;
            write_scores(&out, &scores)?;
            eprintln!("scored {} samples with msp", scores.len());
            print_json(&json!({"out": out, "n": scores.len(), "scorer": scores.scorer}))
        }
        Command::Eval {
            ind,
            ood,
            model,
            ind_data,
            ood_data,
            scorer,
            out,
        } => {
            let report = match (ind, ood, model, ind_data, ood_data) {
                (Some(ind), Some(ood), None, None, None) => {
                    if scorer.scorer.is_some() {
                        return Err(Error::input("--scorer is only used with --model"));
                    }
                    evaluate_scores(&read_scores(&ind)?, &read_scores(&ood)?)?
                }
                (None, None, Some(model), Some(ind_data), Some(ood_data)) => {
                    let model = load_model(&model)?;
                    let ind = load_dataset(&ind_data)?;
                    let ood = load_dataset(&ood_data)?;
                    evaluate(&model.suite, &ind, &ood, &scorer.resolve()?)?
                }
                _ => {
                    return Err(Error::input(
                        "eval needs either --ind/--ood score files or --model/--ind-data/--ood-data/--scorer",
                    ))
                }
            };
            summarize_eval(&report);
            write_json(out.as_deref(), &report)
        }
        Command::Eigen {
            model,
            ind_data,
            ood_data,
            out,
        } => {
            let model = load_model(&model)?;
            let report = eigen_report(&model.suite, &load_dataset(&ind_data)?, &load_dataset(&ood_data)?)?;
            write_text(&out, &eigen_report_csv(&report))?;
            eprintln!(
                "wrote {} eigen-axes; suggested split (heuristic) at d={}",
                report.dim, report.suggested_split
            );
            print_json(&json!({"out": out, "dim": report.dim, "suggested_split": report.suggested_split}))
        }
        Command::PmdSweep {
            model,
            ind_data,
            ood_data,
            out,
        } => {
            let model = load_model(&model)?;
            let suite = &model.suite;
            let ind = load_dataset(&ind_data)?;
            let ood = load_dataset(&ood_data)?;
            let rows = pmd_sweep(suite, &ind, &ood)?;
            let md = auroc_values(&score_md(suite, &ind)?.scores, &score_md(suite, &ood)?.scores)?;
            let rmd = auroc_values(&score_rmd(suite, &ind)?.scores, &score_rmd(suite, &ood)?.scores)?;
            write_text(&out, &sweep_csv(&rows, &[("auroc_md", md), ("auroc_rmd", rmd)]))?;
            let best = rows
                .iter()
                .max_by(|a, b| a.auroc_head.total_cmp(&b.auroc_head))
                .expect("dim >= 1");
            eprintln!(
                "PMD head peak AUROC {:.4} at d={} (MD {md:.4}, RMD {rmd:.4})",
                best.auroc_head, best.d
            );
            print_json(&json!({
                "out": out,
                "best_head_d": best.d,
                "best_head_auroc": best.auroc_head,
                "auroc_md": md,
                "auroc_rmd": rmd,
            }))
        }
        Command::Simulate { config, out_dir } => simulate(config.as_deref(), &out_dir),
    }
}

fn fit(train: &Path, out: &Path, ridge_policy: RidgePolicy) -> Result<()> {
    let train = load_dataset(train)?;
    let remap = train
        .labels()
        .ok_or_else(|| Error::input("training data needs labels (labels_path or label_column in the manifest)"))?
        .original()
        .to_vec();
    let suite = crate::build_suite(&train, ridge_policy)?;
    let model = ModelFile {
        meta: ModelMeta::now(ridge_policy, remap),
        suite,
    };
    save_model(out, &model)?;
    let s = &model.suite;
    let (r, r0) = (s.shared_factor().ridge(), s.background_factor().ridge());
    eprintln!(
        "fitted {} classes, D={}, N={}; ridge shared={r:e} background={r0:e}",
        s.class_count(),
        s.dim(),
        train.n_samples()
    );
    print_json(&json!({
        "out": out,
        "fingerprint": s.fingerprint(),
        "dim": s.dim(),
        "classes": s.class_count(),
        "n_train": train.n_samples(),
        "shared_ridge": r,
        "background_ridge": r0,
        "ridge_applied": r > 0.0 || r0 > 0.0,
    }))
}

fn simulate(config: Option<&Path>, out_dir: &Path) -> Result<()> {
    let cfg: SimConfig = match config {
        Some(p) => serde_json::from_str(&crate::io::read_text(p)?)
            .map_err(|e| Error::input(format!("config {}: {e}", p.display())))?,
        None => SimConfig::default(),
    };
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let report = run_study(&cfg)?;
    write_json(Some(&out_dir.join("report.json")), &report)?;
    if let Some(eigen) = &report.eigen {
        write_text(&out_dir.join("eigen.csv"), &eigen_report_csv(eigen))?;
    }
    eprintln!(
        "simulation D={} sigma={}: AUROC MD {:.4}, RMD {:.4}",
        cfg.dim, cfg.sigma, report.auroc_md, report.auroc_rmd
    );
    write_json(None, &report)
}

fn summarize_eval(report: &EvalReport) {
    eprintln!(
        "AUROC ({}) = {:.4} over {} IND / {} OOD samples",
        report.scorer, report.auroc, report.n_ind, report.n_ood
    );
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    write_json(None, value)
}
