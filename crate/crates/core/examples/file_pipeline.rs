//! Disk-based workflow: write rawf32 embeddings and a labels file, fit and
//! save a model, reload it, write score files, and evaluate from them.
//!
//! cargo run --release --example file_pipeline

use std::fs;

use ood_scope::io::{
    load_features, load_model, read_scores, save_model, write_rawf32, write_scores, DatasetManifest, ModelFile,
    ModelMeta,
};
use ood_scope::metrics::evaluate_scores;
use ood_scope::scoring::score;
use ood_scope::simulation::{generate, SimConfig};
use ood_scope::{build_suite, RidgePolicy, Scorer};

fn main() -> ood_scope::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = |name: &str| dir.path().join(name);
    let data = generate(&SimConfig {
        dim: 32,
        n_train_per_class: 1000,
        ..SimConfig::default()
    })?;

    write_rawf32(&path("train.f32"), &data.train.data().to_owned())?;
    write_rawf32(&path("ind.f32"), &data.ind_test.data().to_owned())?;
    write_rawf32(&path("ood.f32"), &data.ood_test.data().to_owned())?;
    // original label values need not be dense
    let labels: String = data.train.labels().expect("labeled").ids().iter().map(|&l| format!("{}\n", 100 + l)).collect();
    fs::write(path("train.labels"), labels).expect("write labels");
    fs::write(
        path("train.json"),
        r#"{"features_path": "train.f32", "labels_path": "train.labels", "format": "rawf32"}"#,
    )
    .expect("write manifest");

    let train = load_features(&DatasetManifest::from_file(&path("train.json"))?)?;
    let remap = train.labels().expect("labeled").original().to_vec();
    println!("label remap (dense id -> original): {remap:?}");
    let model = ModelFile {
        suite: build_suite(&train, RidgePolicy::Default)?,
        meta: ModelMeta::now(RidgePolicy::Default, remap),
    };
    save_model(&path("model.oodm"), &model)?;
    let model = load_model(&path("model.oodm"))?;

    for (split, file) in [("ind", "ind.f32"), ("ood", "ood.f32")] {
        let test = load_features(&DatasetManifest::resolve(&path(file))?)?;
        write_scores(&path(&format!("{split}.scores")), &score(&model.suite, &test, &Scorer::Rmd)?)?;
    }
    let report = evaluate_scores(&read_scores(&path("ind.scores"))?, &read_scores(&path("ood.scores"))?)?;
    println!(
        "RMD AUROC {:.4} over {} IND / {} OOD, model {}",
        report.auroc, report.n_ind, report.n_ood, report.model_fingerprint
    );
    Ok(())
}
