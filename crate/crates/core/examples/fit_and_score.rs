//! Fits the Gaussian suite on labeled features and compares every scorer on
//! the same IND/OOD split.
//!
//! cargo run --release --example fit_and_score

use ood_scope::metrics::evaluate;
use ood_scope::simulation::{generate, SimConfig};
use ood_scope::{build_suite, PmdIndexSet, RidgePolicy, Scorer};

fn main() -> ood_scope::Result<()> {
    let data = generate(&SimConfig {
        dim: 128,
        n_train_per_class: 2000,
        ..SimConfig::default()
    })?;
    let suite = build_suite(&data.train, RidgePolicy::Default)?;
    println!(
        "fitted K={} D={} fingerprint={}",
        suite.class_count(),
        suite.dim(),
        suite.fingerprint()
    );

    let scorers = [
        Scorer::Md,
        Scorer::Rmd,
        Scorer::Mmd,
        Scorer::Pmd(PmdIndexSet::Head(8)),
        Scorer::Pmd(PmdIndexSet::Tail(8)),
    ];
    for scorer in &scorers {
        let report = evaluate(&suite, &data.ind_test, &data.ood_test, scorer)?;
        println!("{:<12} AUROC {:.4}", scorer.to_string(), report.auroc);
    }
    Ok(())
}
