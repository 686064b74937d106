//! Out-of-distribution scoring for feature embeddings with class-conditional
//! Gaussians: Mahalanobis distance (MD), relative Mahalanobis distance (RMD),
//! partial and marginal variants, a softmax baseline, AUROC evaluation,
//! per-eigen-axis diagnostics and a synthetic failure-mode study.
//!
//! ```
//! use ood_scope::{build_suite, FeatureMatrix, RidgePolicy};
//! use ood_scope::scoring::{score_md, score_rmd};
//!
//! let train = FeatureMatrix::labeled_from_rows(
//!     &[vec![0.0, 0.1], vec![0.2, -0.1], vec![3.0, 0.0], vec![3.1, 0.2]],
//!     &[0, 0, 1, 1],
//! )?;
//! let suite = build_suite(&train, RidgePolicy::Default)?;
//! let test = FeatureMatrix::from_rows(&[vec![0.1, 0.0], vec![9.0, 5.0]])?;
//! let md = score_md(&suite, &test)?;
//! assert!(md.scores[0] > md.scores[1]);
//! let rmd = score_rmd(&suite, &test)?;
//! assert_eq!(rmd.len(), 2);
//! # Ok::<(), ood_scope::Error>(())
//! ```

pub mod cli;
pub mod eigen_analysis;
pub mod error;
pub mod features;
pub mod gaussian;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod scoring;
pub mod simulation;

pub use error::{Error, Result};
pub use features::{FeatureMatrix, Labels};
pub use gaussian::{build_suite, fit_background, fit_class_conditional, GaussianSuite};
pub use linalg::{RidgePolicy, SymMatrix};
pub use metrics::{auroc, auroc_values, evaluate, EvalReport};
pub use scoring::{PmdIndexSet, ScoreVector, Scorer};
