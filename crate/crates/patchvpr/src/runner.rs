//! Parallel training and matching on a fixed-size worker pool.
//!
//! Work items are independent units (training) or independent
//! `(unit, patch)` evaluations (matching). Results are always collected back
//! into canonical group/unit/patch order before voting, so output does not
//! depend on the thread count.

use std::time::{Duration, Instant};

use patchvpr_core::ensemble::{cell_samples, train_unit};
use patchvpr_core::{split_grid, EnsembleConfig, ImageTensor, MatchResult, PatchEnsemble, PatchGrid};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

pub struct Runner {
    pool: ThreadPool,
}

impl Runner {
    /// `threads = None` uses the machine's available parallelism.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let mut builder = ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(Error::Usage("--threads must be at least 1".into()));
            }
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `f` inside the pool, so nested rayon calls use its threads.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// Same result as [`PatchEnsemble::build_and_train`], with every unit trained as its own task.
    pub fn train(&self, config: EnsembleConfig, references: &[ImageTensor]) -> Result<PatchEnsemble> {
        config.validate()?;
        if references.len() < 2 {
            return Err(patchvpr_core::Error::TooFew {
                what: "reference images",
                min: 2,
                actual: references.len(),
            }
            .into());
        }
        let n_places = references.len();
        let z = config.units_per_patch;
        self.pool.install(|| {
            let grids: Vec<PatchGrid> = references.par_iter().map(|r| split_grid(r, config.grid)).collect();
            let units = (0..config.grid.cells() * z)
                .into_par_iter()
                .map(|job| {
                    let (g, u) = (job / z, job % z);
                    train_unit(&config, n_places, g, u, &cell_samples(&grids, g))
                })
                .collect::<patchvpr_core::Result<Vec<_>>>()?;
            let mut units = units.into_iter();
            let groups = (0..config.grid.cells()).map(|_| units.by_ref().take(z).collect()).collect();
            Ok(PatchEnsemble::from_groups(config, n_places, groups)?)
        })
    }

    /// Same result as [`PatchEnsemble::match_query`], with units evaluated in parallel.
    pub fn match_query(&self, ensemble: &PatchEnsemble, query: &ImageTensor) -> MatchResult {
        self.pool.install(|| {
            let grid = split_grid(query, ensemble.config().grid);
            let units: Vec<_> = ensemble.units().collect();
            let vectors: Vec<_> =
                units.par_iter().flat_map_iter(|unit| PatchEnsemble::unit_scores(unit, &grid)).collect();
            MatchResult::from_vectors(&vectors, ensemble.config().voting)
                .expect("an ensemble always yields at least one vector")
        })
    }

    /// Matches every query one after another, timing each match. Timing
    /// covers splitting and resizing; images are already in memory.
    pub fn time_queries(&self, ensemble: &PatchEnsemble, queries: &[ImageTensor]) -> TimedRun {
        let mut results = Vec::with_capacity(queries.len());
        let mut durations = Vec::with_capacity(queries.len());
        for q in queries {
            let start = Instant::now();
            let result = self.match_query(ensemble, q);
            durations.push(start.elapsed());
            results.push(result);
        }
        TimedRun { results, durations }
    }
}

#[derive(Debug, Clone)]
pub struct TimedRun {
    pub results: Vec<MatchResult>,
    pub durations: Vec<Duration>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use patchvpr_core::{GridShape, SynthSpec};

    #[test]
    fn parallel_paths_match_sequential_core() {
        let data = patchvpr_core::generate(&SynthSpec {
            n_places: 6,
            noise_sigma: 0.05,
            base_seed: 2,
            ..SynthSpec::default()
        })
        .unwrap();
        let mut cfg = EnsembleConfig::new(GridShape::new(2, 2).unwrap(), 2);
        cfg.unit_config.epochs = 5;
        cfg.master_seed = 12;
        let sequential = PatchEnsemble::build_and_train(cfg, &data.references).unwrap();
        for threads in [1, 3] {
            let runner = Runner::new(Some(threads)).unwrap();
            let parallel = runner.train(cfg, &data.references).unwrap();
            assert_eq!(parallel, sequential);
            for q in &data.queries {
                assert_eq!(runner.match_query(&parallel, q), sequential.match_query(q));
            }
        }
    }

    #[test]
    fn zero_threads_is_a_usage_error() {
        assert!(matches!(Runner::new(Some(0)), Err(Error::Usage(_))));
    }
}
