mod common;

use std::fs;
use std::path::Path;

use ndarray::{array, Array2};
use tempfile::TempDir;

use common::{comment_value, csv_rows, random_labeled, random_unlabeled, write_dataset};

struct Fixture {
    dir: TempDir,
    dim: usize,
}

impl Fixture {
    /// Three labeled classes, IND test drawn like the training set, OOD test
    /// shifted away.
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let dim = 6;
        let train = random_labeled(17, 400, dim, 3);
        let labels: Vec<i64> = train.labels().unwrap().ids().iter().map(|&l| 10 * l as i64 + 3).collect();
        write_dataset(dir.path(), "train", &train.data().to_owned(), Some(&labels));
        let ind = random_labeled(17, 60, dim, 3);
        write_dataset(dir.path(), "ind", &ind.data().to_owned(), None);
        let ood = &random_unlabeled(99, 50, dim, 1.0).data() + 6.0;
        write_dataset(dir.path(), "ood", &ood, None);
        Fixture { dir, dim }
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.dir.path().join(name)
    }

    fn fit(&self) {
        let out = cli!("fit", "--train", self.path("train.json"), "--out", self.path("model.oodm"));
        assert_eq!(out.code, 0, "{}", out.stderr);
        let info: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(info["classes"], 3);
        assert_eq!(info["dim"], self.dim);
    }
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn staged_and_one_shot_eval_agree_byte_for_byte() {
    let fx = Fixture::new();
    fx.fit();
    for (scorer, extra) in [("md", None), ("rmd", None), ("mmd", None), ("pmd", Some("--pmd-head=2"))] {
        let mut ind_args = vec!["score".to_string(), "--model".into(), fx.path("model.oodm").display().to_string()];
        ind_args.extend(["--scorer".into(), scorer.into()]);
        ind_args.extend(extra.map(String::from));
        for split in ["ind", "ood"] {
            let mut a = ind_args.clone();
            a.extend(["--data".into(), fx.path(&format!("{split}.csv")).display().to_string()]);
            a.extend(["--out".into(), fx.path(&format!("{split}.scores")).display().to_string()]);
            let a: Vec<&std::ffi::OsStr> = a.iter().map(std::ffi::OsStr::new).collect();
            let out = common::run_cli(&a);
            assert_eq!(out.code, 0, "{}", out.stderr);
        }
        let staged = cli!("eval", "--ind", fx.path("ind.scores"), "--ood", fx.path("ood.scores"), "--out", fx.path("staged.json"));
        assert_eq!(staged.code, 0, "{}", staged.stderr);
        let mut one = vec![
            "eval".to_string(),
            "--model".into(),
            fx.path("model.oodm").display().to_string(),
            "--ind-data".into(),
            fx.path("ind.csv").display().to_string(),
            "--ood-data".into(),
            fx.path("ood.csv").display().to_string(),
            "--scorer".into(),
            scorer.into(),
            "--out".into(),
            fx.path("oneshot.json").display().to_string(),
        ];
        one.extend(extra.map(String::from));
        let one: Vec<&std::ffi::OsStr> = one.iter().map(std::ffi::OsStr::new).collect();
        let out = common::run_cli(&one);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert_eq!(read(&fx.path("staged.json")), read(&fx.path("oneshot.json")), "scorer {scorer}");
        let report: serde_json::Value = serde_json::from_str(&read(&fx.path("staged.json"))).unwrap();
        assert!(report["auroc"].as_f64().unwrap() > 0.9, "scorer {scorer}");
    }
}

#[test]
fn score_file_carries_provenance() {
    let fx = Fixture::new();
    fx.fit();
    let out = cli!("score", "--model", fx.path("model.oodm"), "--data", fx.path("ind.csv"), "--scorer", "pmd", "--pmd-tail", "3", "--out", fx.path("s.csv"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = read(&fx.path("s.csv"));
    assert_eq!(comment_value(&text, "scorer").as_deref(), Some("pmd-tail-3"));
    assert_eq!(csv_rows(&text).len(), 60);
    let fp = comment_value(&text, "model_fingerprint").unwrap();
    let info: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(info["model_fingerprint"], fp.as_str());
}

#[test]
fn perfectly_separated_score_files_give_auroc_one() {
    let dir = TempDir::new().unwrap();
    let body = |vals: &[f64]| {
        let mut s = "# ood-scope scores v1\n# scorer=md\n# model_fingerprint=abc\n# params={}\nindex,score\n".to_string();
        for (i, v) in vals.iter().enumerate() {
            s.push_str(&format!("{i},{v:.16e}\n"));
        }
        s
    };
    fs::write(dir.path().join("ind.csv"), body(&[-1.0, -2.0, -3.0])).unwrap();
    fs::write(dir.path().join("ood.csv"), body(&[-10.0, -20.0])).unwrap();
    let out = cli!("eval", "--ind", dir.path().join("ind.csv"), "--ood", dir.path().join("ood.csv"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(report["auroc"], 1.0);
    assert_eq!(report["n_ind"], 3);
    assert_eq!(report["n_ood"], 2);
}

#[test]
fn mismatched_fingerprints_warn_but_evaluate() {
    let dir = TempDir::new().unwrap();
    let body = |fp: &str| format!("# ood-scope scores v1\n# scorer=md\n# model_fingerprint={fp}\n# params={{}}\nindex,score\n0,1.0\n");
    fs::write(dir.path().join("a.csv"), body("aaa")).unwrap();
    fs::write(dir.path().join("b.csv"), body("bbb")).unwrap();
    let out = cli!("eval", "--ind", dir.path().join("a.csv"), "--ood", dir.path().join("b.csv"));
    assert_eq!(out.code, 0);
    let report: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(report["auroc"], 0.5);
    assert!(!report["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn pmd_sweep_full_head_matches_md() {
    let fx = Fixture::new();
    fx.fit();
    let out = cli!("pmd-sweep", "--model", fx.path("model.oodm"), "--ind-data", fx.path("ind.csv"), "--ood-data", fx.path("ood.csv"), "--out", fx.path("sweep.csv"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = read(&fx.path("sweep.csv"));
    let md: f64 = comment_value(&text, "auroc_md").unwrap().parse().unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), fx.dim);
    let last = rows.last().unwrap();
    assert_eq!(last[0], fx.dim.to_string());
    assert!((last[2].parse::<f64>().unwrap() - md).abs() <= 1e-9);
    assert_eq!(last[3], "");
    let lambdas: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn eigen_csv_has_one_row_per_axis() {
    let fx = Fixture::new();
    fx.fit();
    let out = cli!("eigen", "--model", fx.path("model.oodm"), "--ind-data", fx.path("ind.csv"), "--ood-data", fx.path("ood.csv"), "--out", fx.path("eigen.csv"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = read(&fx.path("eigen.csv"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), fx.dim);
    assert!(rows.iter().all(|r| r.len() == 14));
    let split: usize = comment_value(&text, "suggested_split").unwrap().split_whitespace().next().unwrap().parse().unwrap();
    // D + 1 means no quiet tail
    assert!((1..=fx.dim + 1).contains(&split));
}

#[test]
fn msp_scores_logits() {
    let dir = TempDir::new().unwrap();
    let logits = array![[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]];
    write_dataset(dir.path(), "logits", &logits, None);
    let out = cli!("score-msp", "--logits", dir.path().join("logits.csv"), "--out", dir.path().join("msp.csv"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = read(&dir.path().join("msp.csv"));
    let vals: Vec<f64> = csv_rows(&text).iter().map(|r| r[1].parse().unwrap()).collect();
    let e = std::f64::consts::E;
    assert!((vals[0] - e.powi(3) / (e + e * e + e.powi(3))).abs() < 1e-12);
    assert!((vals[1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn simulate_writes_report_and_eigen_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"dim": 8, "n_train_per_class": 300, "n_test_per_class": 40, "seed": 1}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = cli!("simulate", "--config", cfg, "--out-dir", out_dir);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report: serde_json::Value = serde_json::from_str(&read(&out_dir.join("report.json"))).unwrap();
    assert_eq!(report["config"]["sigma"], 0.25);
    assert!(report["auroc_rmd"].as_f64().unwrap() > 0.9);
    assert_eq!(csv_rows(&read(&out_dir.join("eigen.csv"))).len(), 8);

    fs::write(&cfg, r#"{"dimension": 8}"#).unwrap();
    assert_eq!(cli!("simulate", "--config", cfg, "--out-dir", out_dir).code, 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cli!("--bogus").code, 1);
    assert_eq!(cli!("fit", "--train", "x.csv").code, 1);
    assert_eq!(cli!("score", "--model", "m", "--data", "d", "--out", "o", "--scorer", "pmd").code, 1);
    assert_eq!(cli!("--help").code, 0);
    assert_eq!(cli!("fit", "--train", "/nonexistent/t.json", "--out", "/tmp/never").code, 1);
}

#[test]
fn dimension_mismatch_is_reported() {
    let fx = Fixture::new();
    fx.fit();
    write_dataset(fx.dir.path(), "wide", &Array2::zeros((4, fx.dim + 1)), None);
    let out = cli!("score", "--model", fx.path("model.oodm"), "--data", fx.path("wide.csv"), "--scorer", "md", "--out", fx.path("s.csv"));
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains(&fx.dim.to_string()) && out.stderr.contains(&(fx.dim + 1).to_string()), "{}", out.stderr);
    assert!(!fx.path("s.csv").exists());
}

#[test]
fn unlabeled_training_data_is_rejected() {
    let fx = Fixture::new();
    let out = cli!("fit", "--train", fx.path("ind.csv"), "--out", fx.path("m.oodm"));
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("label"), "{}", out.stderr);
}

#[test]
fn singular_covariance_without_ridge_exits_two() {
    let dir = TempDir::new().unwrap();
    // second coordinate is an exact copy of the first
    let data = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0]];
    let train = write_dataset(dir.path(), "t", &data, Some(&[0, 0, 1, 1]));
    let out = cli!("fit", "--train", train, "--out", dir.path().join("m.oodm"), "--ridge-policy", "none");
    assert_eq!(out.code, 2, "{}", out.stderr);
    let out = cli!("fit", "--train", train, "--out", dir.path().join("m.oodm"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let info: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(info["ridge_applied"], true);
}

#[test]
fn corrupted_model_is_rejected() {
    let fx = Fixture::new();
    fx.fit();
    let mut bytes = fs::read(fx.path("model.oodm")).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    fs::write(fx.path("bad.oodm"), bytes).unwrap();
    let out = cli!("score", "--model", fx.path("bad.oodm"), "--data", fx.path("ind.csv"), "--scorer", "md", "--out", fx.path("s.csv"));
    assert_eq!(out.code, 1);
    assert!(out.stderr.to_lowercase().contains("checksum"), "{}", out.stderr);
}

#[test]
fn rawf32_and_manifest_inputs_load() {
    let fx = Fixture::new();
    fx.fit();
    let ind = ood_scope::io::load_features(&ood_scope::io::DatasetManifest::resolve(&fx.path("ind.csv")).unwrap()).unwrap();
    ood_scope::io::write_rawf32(&fx.path("ind.f32"), &ind.data().to_owned()).unwrap();
    let out = cli!("score", "--model", fx.path("model.oodm"), "--data", fx.path("ind.f32"), "--scorer", "md", "--out", fx.path("f.csv"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let out = cli!("score", "--model", fx.path("model.oodm"), "--data", fx.path("ind.csv"), "--scorer", "md", "--out", fx.path("c.csv"));
    assert_eq!(out.code, 0);
    let f: Vec<f64> = csv_rows(&read(&fx.path("f.csv"))).iter().map(|r| r[1].parse().unwrap()).collect();
    let c: Vec<f64> = csv_rows(&read(&fx.path("c.csv"))).iter().map(|r| r[1].parse().unwrap()).collect();
    // f32 storage perturbs inputs at the 1e-7 relative level
    for (a, b) in f.iter().zip(&c) {
        assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0), "{a} vs {b}");
    }
}
