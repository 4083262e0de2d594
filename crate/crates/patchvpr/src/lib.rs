//! IO, parallel execution and reporting around [`patchvpr_core`].
//!
//! The `patchvpr` binary ties these together into the `gen`, `train`, `eval`
//! and `bench` commands.

pub mod config;
pub mod dataset;
mod error;
pub mod imageio;
pub mod model_io;
pub mod report;
pub mod runner;
pub mod svg;

pub use error::{Error, Result};
pub use runner::Runner;
