//! Allocation-only core of a patch-specialised DrosoNet place recogniser.
//!
//! Reference images are cut into an `r x c` grid of 32x64 patches. Each grid
//! cell owns a group of `z` small classifiers ([`unit::DrosoNetModel`]) that
//! are trained only on that cell of every reference. At query time every
//! unit scores every query patch, and the `T * r * c` score vectors are
//! merged by [`ensemble::vote`].
//!
//! The crate is `no_std` and needs only `alloc`. Image decoding, model files,
//! parallel execution and timing live in the `patchvpr` companion crate.
//!
//! - [`improc`] – grayscale tensors, bilinear resize and grid splitting.
//! - [`unit`] – the single classifier: sparse binary projection, winner-take-all, softmax.
//! - [`ensemble`] – patch groups, exhaustive matching and voting.
//! - [`eval`] – frame-tolerance correctness, precision-recall curves and AUC.
//! - [`synth`] – deterministic procedural reference/query traverses.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod ensemble;
mod error;
pub mod eval;
pub mod improc;
pub mod seed;
pub mod synth;
pub mod unit;

pub use ensemble::{
    ensemble_size, vote, EnsembleConfig, EnsembleSize, MatchResult, PatchEnsemble, Tally, VotingMode,
};
pub use error::{Error, Result};
pub use eval::{auc, is_correct, pr_curve, PrPoint, PrRecord};
pub use improc::{resize, split_grid, GridShape, ImageTensor, PatchGrid, PATCH_COLS, PATCH_LEN, PATCH_ROWS};
pub use synth::{generate, CorruptMode, Corruption, SynthDataset, SynthSpec};
pub use unit::{DrosoNetModel, Projection, ScoreVector, UnitConfig};
