#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ood_scope::{FeatureMatrix, Labels};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Labeled Gaussian blobs with random means and a random shared mixing
/// matrix, every class non-empty.
pub fn random_labeled(seed: u64, n: usize, dim: usize, classes: usize) -> FeatureMatrix {
    let mut r = rng(seed);
    let means = Array2::from_shape_fn((classes, dim), |_| r.random_range(-2.0..2.0));
    let mix = Array2::from_shape_fn((dim, dim), |(i, j)| {
        let g: f64 = StandardNormal.sample(&mut r);
        if i == j { 1.0 + 0.2 * g } else { 0.3 * g }
    });
    let labels: Vec<usize> = (0..n).map(|i| if i < classes { i } else { r.random_range(0..classes) }).collect();
    let noise = Array2::from_shape_fn((n, dim), |_| StandardNormal.sample(&mut r));
    let mut data = noise.dot(&mix);
    for (i, &l) in labels.iter().enumerate() {
        let mut row = data.row_mut(i);
        row += &means.row(l);
    }
    FeatureMatrix::with_labels(data, Labels::from_dense(labels, classes).unwrap()).unwrap()
}

pub fn random_unlabeled(seed: u64, n: usize, dim: usize, scale: f64) -> FeatureMatrix {
    let mut r = rng(seed);
    let data = Array2::from_shape_fn((n, dim), |_| {
        let g: f64 = StandardNormal.sample(&mut r);
        scale * g
    });
    FeatureMatrix::new(data).unwrap()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// O(n²) pairwise AUROC with ties counted one half.
pub fn pairwise_auroc(ind: &[f64], ood: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &a in ind {
        for &b in ood {
            if a > b {
                wins += 1.0;
            } else if a == b {
                wins += 0.5;
            }
        }
    }
    wins / (ind.len() * ood.len()) as f64
}

/// Writes `data` as CSV with an optional trailing label column and returns
/// the path to load it by: a manifest when labeled, the CSV itself otherwise.
pub fn write_dataset(
    dir: &std::path::Path,
    name: &str,
    data: &Array2<f64>,
    labels: Option<&[i64]>,
) -> std::path::PathBuf {
    use ood_scope::io::{write_csv_features, DatasetManifest, FeatureFormat};
    let csv = dir.join(format!("{name}.csv"));
    write_csv_features(&csv, data, labels).unwrap();
    match labels {
        None => csv,
        Some(_) => {
            let mut m = DatasetManifest::new(format!("{name}.csv"), FeatureFormat::Csv);
            m.label_column = Some(data.ncols());
            let path = dir.join(format!("{name}.json"));
            std::fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
            path
        }
    }
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_cli(args: &[&std::ffi::OsStr]) -> Output {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_ood-scope"))
        .args(args)
        .output()
        .expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

#[macro_export]
macro_rules! cli {
    ($($arg:expr),* $(,)?) => {
        common::run_cli(&[$(std::ffi::OsStr::new(&$arg)),*])
    };
}

/// Data rows of a CSV, skipping `#` comments and the header line.
pub fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Value of a `# key=value` comment line.
pub fn comment_value(text: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}=");
    text.lines().find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
}
