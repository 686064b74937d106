//! Runs the synthetic study where two classes differ only along the first of
//! `D` coordinates, and prints how MD and RMD separate IND from OOD.
//!
//! cargo run --release --example simulate_failure_mode -- [dim] [seed]

use std::time::Instant;

use ood_scope::simulation::{run_study, SimConfig};

fn main() -> ood_scope::Result<()> {
    let mut args = std::env::args().skip(1);
    let dim = args.next().map_or(1024, |a| a.parse().expect("dim"));
    let seed = args.next().map_or(0, |a| a.parse().expect("seed"));
    let cfg = SimConfig {
        dim,
        seed,
        ..SimConfig::default()
    };

    let start = Instant::now();
    let report = run_study(&cfg)?;
    println!("D={dim} sigma={} seed={seed}", cfg.sigma);
    println!("  AUROC MD  = {:.4}", report.auroc_md);
    println!("  AUROC RMD = {:.4}", report.auroc_rmd);
    println!("  ridge (shared/background) = {:e} / {:e}", report.shared_ridge, report.background_ridge);

    if let Some(eigen) = &report.eigen {
        // axes where OOD samples sit furthest beyond IND samples
        let mut axes: Vec<_> = eigen.per_dim.iter().collect();
        axes.sort_by(|a, b| {
            let ga = a.ood_md.mean - a.ind_md.mean;
            let gb = b.ood_md.mean - b.ind_md.mean;
            gb.total_cmp(&ga)
        });
        println!("  largest per-axis MD gaps (OOD mean - IND mean):");
        for s in axes.iter().take(5) {
            println!(
                "    d={:<5} lambda={:.4}  MD gap={:.3}  RMD gap={:.3}",
                s.d,
                s.lambda,
                s.ood_md.mean - s.ind_md.mean,
                s.ood_rmd.mean - s.ind_rmd.mean
            );
        }
    }
    println!("  elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
