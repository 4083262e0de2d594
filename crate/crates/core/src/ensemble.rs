//! Patch groups, exhaustive matching and the voting merge.
//!
//! An ensemble over an `r x c` grid holds one group of `z` units per cell,
//! `T = r * c * z` units in total. Group `g` is trained on cell `g` of every
//! reference only. A query is split the same way and every unit scores every
//! query patch, so one match costs `C = T * r * c` unit evaluations.

use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::improc::{split_grid, GridShape, ImageTensor, PatchGrid};
use crate::seed;
use crate::unit::{DrosoNetModel, ScoreVector, UnitConfig};

/// How the `C` score vectors of a query are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VotingMode {
    /// Min-max normalise every vector, then sum.
    #[default]
    Soft,
    /// One vote per vector for its argmax place.
    Hard,
}

impl VotingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VotingMode::Soft => "soft",
            VotingMode::Hard => "hard",
        }
    }
}

impl core::fmt::Display for VotingMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VotingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "soft" => Ok(VotingMode::Soft),
            "hard" => Ok(VotingMode::Hard),
            _ => Err(Error::Parse("voting mode must be soft or hard")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub grid: GridShape,
    pub units_per_patch: usize,
    /// Template for every unit. Its `seed` is replaced per unit by
    /// [`seed::unit_seed`] of `master_seed`.
    pub unit_config: UnitConfig,
    pub voting: VotingMode,
    pub master_seed: u64,
}

impl EnsembleConfig {
    pub fn new(grid: GridShape, units_per_patch: usize) -> Self {
        Self {
            grid,
            units_per_patch,
            unit_config: UnitConfig::default(),
            voting: VotingMode::Soft,
            master_seed: 0,
        }
    }

    pub fn size(&self) -> EnsembleSize {
        ensemble_size(self.grid, self.units_per_patch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.units_per_patch == 0 {
            return Err(Error::InvalidConfig("units_per_patch must be at least 1"));
        }
        self.unit_config.validate()
    }

    /// Config of unit `unit` in group `group`, with its derived seed.
    pub fn unit_config_for(&self, group: usize, unit: usize) -> UnitConfig {
        UnitConfig { seed: seed::unit_seed(self.master_seed, group, unit), ..self.unit_config }
    }
}

/// Unit count and per-query evaluation count of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleSize {
    /// `T = r * c * z`.
    pub total_units: usize,
    /// `C = T * r * c`.
    pub calls_per_query: usize,
}

pub fn ensemble_size(grid: GridShape, units_per_patch: usize) -> EnsembleSize {
    let total_units = grid.cells() * units_per_patch;
    EnsembleSize { total_units, calls_per_query: total_units * grid.cells() }
}

/// Output of [`vote`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tally {
    /// Merged score per place: normalised sums (soft) or vote counts (hard).
    pub scores: Vec<f64>,
    /// Soft sums. Identical to `scores` in soft mode; in hard mode it breaks
    /// ties between places with equal counts.
    pub soft_sums: Vec<f64>,
}

impl Tally {
    /// Highest `scores`, then highest `soft_sums`, then lowest index.
    pub fn winner(&self) -> usize {
        let mut best = 0;
        for i in 1..self.scores.len() {
            let (s, b) = (self.scores[i], self.scores[best]);
            if s > b || (s == b && self.soft_sums[i] > self.soft_sums[best]) {
                best = i;
            }
        }
        best
    }
}

fn add_min_max(acc: &mut [f64], v: &[f64]) {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let span = hi - lo;
    // A constant vector ranks nothing and abstains.
    if span.partial_cmp(&0.0) != Some(core::cmp::Ordering::Greater) {
        return;
    }
    for (a, &x) in acc.iter_mut().zip(v) {
        *a += (x - lo) / span;
    }
}

/// Merges score vectors in the order given.
pub fn vote(vectors: &[ScoreVector], mode: VotingMode) -> Result<Tally> {
    let first = vectors.first().ok_or(Error::TooFew { what: "score vectors", min: 1, actual: 0 })?;
    let n = first.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::LengthMismatch { expected: n, actual: bad.len() });
    }
    let mut soft_sums = vec![0.0; n];
    for v in vectors {
        add_min_max(&mut soft_sums, v.as_slice());
    }
    let scores = match mode {
        VotingMode::Soft => soft_sums.clone(),
        VotingMode::Hard => {
            let mut counts = vec![0.0; n];
            for v in vectors {
                counts[v.argmax()] += 1.0;
            }
            counts
        }
    };
    Ok(Tally { scores, soft_sums })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub final_scores: Vec<f64>,
    pub predicted_place: usize,
    /// Winning merged score divided by `calls_made`, in `[0, 1]`.
    pub confidence: f64,
    pub calls_made: usize,
}

impl MatchResult {
    /// Builds the result from vectors that are already in canonical order.
    pub fn from_vectors(vectors: &[ScoreVector], mode: VotingMode) -> Result<Self> {
        let tally = vote(vectors, mode)?;
        let predicted_place = tally.winner();
        let calls_made = vectors.len();
        let confidence = (tally.scores[predicted_place] / calls_made as f64).clamp(0.0, 1.0);
        Ok(Self { final_scores: tally.scores, predicted_place, confidence, calls_made })
    }
}

/// Samples of grid cell `cell`: that patch of every reference, labelled by reference index.
pub fn cell_samples(grids: &[PatchGrid], cell: usize) -> Vec<(&ImageTensor, usize)> {
    grids.iter().enumerate().map(|(label, g)| (g.patch(cell), label)).collect()
}

/// Trains unit `unit` of group `group` on `samples`.
pub fn train_unit(
    config: &EnsembleConfig,
    n_places: usize,
    group: usize,
    unit: usize,
    samples: &[(&ImageTensor, usize)],
) -> Result<DrosoNetModel> {
    let mut model = DrosoNetModel::new(n_places, config.unit_config_for(group, unit))?;
    model.train(samples)?;
    Ok(model)
}

/// Trained patch groups.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchEnsemble {
    config: EnsembleConfig,
    n_places: usize,
    groups: Vec<Vec<DrosoNetModel>>,
}

impl PatchEnsemble {
    /// Splits every reference and trains all groups sequentially.
    ///
    /// `references[n]` depicts place `n`.
    pub fn build_and_train(config: EnsembleConfig, references: &[ImageTensor]) -> Result<Self> {
        config.validate()?;
        if references.len() < 2 {
            return Err(Error::TooFew { what: "reference images", min: 2, actual: references.len() });
        }
        let n_places = references.len();
        let grids: Vec<PatchGrid> = references.iter().map(|r| split_grid(r, config.grid)).collect();
        let mut groups = Vec::with_capacity(config.grid.cells());
        for g in 0..config.grid.cells() {
            let samples = cell_samples(&grids, g);
            let units = (0..config.units_per_patch)
                .map(|u| train_unit(&config, n_places, g, u, &samples))
                .collect::<Result<Vec<_>>>()?;
            groups.push(units);
        }
        Ok(Self { config, n_places, groups })
    }

    /// Assembles an ensemble from trained units, `groups[g][u]`.
    pub fn from_groups(
        config: EnsembleConfig,
        n_places: usize,
        groups: Vec<Vec<DrosoNetModel>>,
    ) -> Result<Self> {
        config.validate()?;
        if groups.len() != config.grid.cells() || groups.iter().any(|g| g.len() != config.units_per_patch) {
            return Err(Error::InvalidConfig("group layout does not match the grid and units_per_patch"));
        }
        if groups.iter().flatten().any(|m| m.n_places() != n_places) {
            return Err(Error::InvalidConfig("units disagree on the number of places"));
        }
        Ok(Self { config, n_places, groups })
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn n_places(&self) -> usize {
        self.n_places
    }

    pub fn groups(&self) -> &[Vec<DrosoNetModel>] {
        &self.groups
    }

    pub fn units(&self) -> impl Iterator<Item = &DrosoNetModel> {
        self.groups.iter().flatten()
    }

    pub fn size(&self) -> EnsembleSize {
        self.config.size()
    }

    /// Changes the merge used by later matches; training is unaffected.
    pub fn set_voting(&mut self, mode: VotingMode) {
        self.config.voting = mode;
    }

    /// Scores of one unit on every query patch, by patch index.
    pub fn unit_scores(unit: &DrosoNetModel, query: &PatchGrid) -> Vec<ScoreVector> {
        query.patches().iter().map(|p| unit.forward(p).expect("split_grid yields 32x64 patches")).collect()
    }

    /// Calls `visit(group, unit, patch, scores)` for every unit and query
    /// patch, ordered by group, then unit, then patch.
    pub fn for_each_score(&self, query: &PatchGrid, mut visit: impl FnMut(usize, usize, usize, ScoreVector)) {
        for (g, group) in self.groups.iter().enumerate() {
            for (u, unit) in group.iter().enumerate() {
                for (p, patch) in query.patches().iter().enumerate() {
                    visit(g, u, p, unit.forward(patch).expect("split_grid yields 32x64 patches"));
                }
            }
        }
    }

    /// All `C` score vectors of a split query in canonical order.
    pub fn score_vectors(&self, query: &PatchGrid) -> Vec<ScoreVector> {
        let mut out = Vec::with_capacity(self.size().calls_per_query);
        self.for_each_score(query, |_, _, _, s| out.push(s));
        out
    }

    pub fn match_patches(&self, query: &PatchGrid) -> MatchResult {
        let vectors = self.score_vectors(query);
        MatchResult::from_vectors(&vectors, self.config.voting)
            .expect("an ensemble always yields at least one vector")
    }

    pub fn match_query(&self, query: &ImageTensor) -> MatchResult {
        self.match_patches(&split_grid(query, self.config.grid))
    }
}
