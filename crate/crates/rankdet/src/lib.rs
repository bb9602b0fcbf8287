//! Spectral post-hoc out-of-distribution scoring.
//!
//! Out-of-distribution feature matrices tend to carry an inflated
//! dominant singular value. This crate implements score functions that
//! exploit that: rank-1 removal from the feature matrix
//! (`rankfeat_score`), rank-1 removal from a deep layer's weights
//! (`rankweight_score`), classical baselines (MSP, ODIN, Energy,
//! ReAct), closed-form score upper bounds, Marchenko-Pastur spectral
//! diagnostics, and an FPR95/AUROC evaluation harness — all validated
//! on seeded synthetic spiked-spectrum data.
//!
//! A narrative guide with the same examples lives in the `book/`
//! directory of the repository.
//!
//! # Quick tour
//!
//! Score a synthetic feature with rank-1 feature removal:
//!
//! ```
//! use rankdet::synth::{gen_feature, gen_head, SynthConfig};
//! use rankdet::scoring::{rankfeat_score, Rank1Method};
//!
//! let cfg = SynthConfig {
//!     channels: 16, height: 5, width: 5,
//!     spike: 4.0, bulk_scale: 1.0, seed: 7, nonnegative: false,
//! };
//! let feature = gen_feature(&cfg)?;
//! let head = gen_head(10, 16, 1)?;
//! let (score, _logits) = rankfeat_score(&feature, &head, Rank1Method::ExactSvd)?;
//! assert!(score.0.is_finite());
//! # Ok::<(), rankdet::Error>(())
//! ```
//!
//! Evaluate how well a score separates two sides:
//!
//! ```
//! use rankdet::evalkit::{evaluate, ScoreSet};
//!
//! let s = ScoreSet::new(vec![3.0, 4.0, 5.0], vec![0.5, 1.0], "demo")?;
//! let report = evaluate(&s)?;
//! assert_eq!(report.auroc, 1.0);
//! assert_eq!(report.fpr95, 0.0);
//! # Ok::<(), rankdet::Error>(())
//! ```

pub mod book;
pub mod bounds;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod evalkit;
pub mod linalg;
pub mod npy;
pub mod pipeline;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};
