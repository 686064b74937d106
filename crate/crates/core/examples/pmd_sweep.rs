//! AUROC of the partial Mahalanobis distance for every head and tail cutoff.
//!
//! cargo run --release --example pmd_sweep

use ood_scope::metrics::evaluate;
use ood_scope::scoring::pmd_sweep;
use ood_scope::simulation::{generate, SimConfig};
use ood_scope::{build_suite, RidgePolicy, Scorer};

fn main() -> ood_scope::Result<()> {
    let data = generate(&SimConfig {
        dim: 256,
        n_train_per_class: 2000,
        ..SimConfig::default()
    })?;
    let suite = build_suite(&data.train, RidgePolicy::Default)?;
    let rows = pmd_sweep(&suite, &data.ind_test, &data.ood_test)?;

    for r in rows.iter().filter(|r| r.d == 1 || r.d % 32 == 0) {
        let tail = r.auroc_tail.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("d={:>4} lambda={:.4} head {:.4} tail {tail}", r.d, r.lambda, r.auroc_head);
    }
    let best = rows.iter().max_by(|a, b| a.auroc_head.total_cmp(&b.auroc_head)).expect("non-empty");
    let md = evaluate(&suite, &data.ind_test, &data.ood_test, &Scorer::Md)?.auroc;
    let rmd = evaluate(&suite, &data.ind_test, &data.ood_test, &Scorer::Rmd)?.auroc;
    println!("best head d={} AUROC {:.4}; MD {md:.4}; RMD {rmd:.4}", best.d, best.auroc_head);
    Ok(())
}
