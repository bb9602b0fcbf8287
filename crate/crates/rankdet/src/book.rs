//! The narrative guide from `book/`, re-exposed as rustdoc so that
//! every code block in the book compiles and runs under
//! `cargo test --doc`. Each empty module below carries one chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/spiked-features.md")]
pub mod spiked_features {}
#[doc = include_str!("../../../book/src/rank1-scores.md")]
pub mod rank1_scores {}
#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}
#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
