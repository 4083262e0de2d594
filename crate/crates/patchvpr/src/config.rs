//! Run configuration file.
//!
//! A TOML file whose keys mirror the long command-line flags:
//!
//! ```toml
//! data = "dataset"
//! grid = "3x1"
//! z = 4
//! voting = "soft"
//! seed = 7
//! epochs = 100
//! ```
//!
//! Every key is optional. Flags given on the command line take precedence.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub refs: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub ensemble: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub grid: Option<String>,
    pub z: Option<usize>,
    pub voting: Option<String>,
    pub tolerance: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub hidden: Option<usize>,
    pub density: Option<f64>,
    pub wta: Option<f64>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Fills every field unset in `self` from `fallback`.
    pub fn or(self, fallback: RunConfig) -> RunConfig {
        RunConfig {
            data: self.data.or(fallback.data),
            refs: self.refs.or(fallback.refs),
            queries: self.queries.or(fallback.queries),
            truth: self.truth.or(fallback.truth),
            ensemble: self.ensemble.or(fallback.ensemble),
            out: self.out.or(fallback.out),
            grid: self.grid.or(fallback.grid),
            z: self.z.or(fallback.z),
            voting: self.voting.or(fallback.voting),
            tolerance: self.tolerance.or(fallback.tolerance),
            seed: self.seed.or(fallback.seed),
            threads: self.threads.or(fallback.threads),
            hidden: self.hidden.or(fallback.hidden),
            density: self.density.or(fallback.density),
            wta: self.wta.or(fallback.wta),
            lr: self.lr.or(fallback.lr),
            epochs: self.epochs.or(fallback.epochs),
        }
    }
}
