//! Maximum softmax probability from Gaussian-discriminant logits, set against
//! MD and RMD on the same features.
//!
//! cargo run --release --example msp_baseline

use ood_scope::metrics::{auroc, evaluate};
use ood_scope::scoring::{class_distances, score_msp};
use ood_scope::simulation::{generate, SimConfig};
use ood_scope::{build_suite, FeatureMatrix, RidgePolicy, Scorer};

fn main() -> ood_scope::Result<()> {
    let data = generate(&SimConfig {
        dim: 128,
        ind_means: vec![-1.0, 0.0, 1.0],
        ood_means: vec![-3.0, 3.0],
        n_train_per_class: 2000,
        ..SimConfig::default()
    })?;
    let suite = build_suite(&data.train, RidgePolicy::Default)?;

    // shared-covariance LDA logits: -MD_k / 2 up to a per-sample constant
    let logits = |x: &FeatureMatrix| -> ood_scope::Result<FeatureMatrix> {
        FeatureMatrix::new(class_distances(&suite, x)? * -0.5)
    };
    let ind = score_msp(&logits(&data.ind_test)?)?;
    let ood = score_msp(&logits(&data.ood_test)?)?;
    // OOD clusters lie beyond the outer classes, where linear logits are most confident
    println!("MSP AUROC {:.4}", auroc(&ind, &ood)?);
    for scorer in [Scorer::Md, Scorer::Rmd] {
        let r = evaluate(&suite, &data.ind_test, &data.ood_test, &scorer)?;
        println!("{:<3} AUROC {:.4}", scorer.to_string().to_uppercase(), r.auroc);
    }
    Ok(())
}
