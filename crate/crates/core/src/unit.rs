//! The single DrosoNet unit.
//!
//! A unit maps a flattened 32x64 patch `x` to a score vector over `N` places:
//!
//! ```text
//! h      = P x                  P: fixed random binary matrix, hidden x 2048
//! h_wta  = top-k(h)             k = ceil(wta_keep_fraction * hidden), rest zeroed
//! scores = softmax(W h_wta + b) W, b: the only trained parameters
//! ```
//!
//! Because `P` never changes, the sparse code `h_wta` of a training patch is
//! computed once and reused across epochs.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::improc::{ImageTensor, PATCH_COLS, PATCH_LEN, PATCH_ROWS};
use crate::seed;

const WORDS_PER_ROW: usize = PATCH_LEN / 64;
const INIT_WEIGHT_RANGE: f64 = 0.05;

/// Hyperparameters of one unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitConfig {
    pub hidden_units: usize,
    pub projection_density: f64,
    pub wta_keep_fraction: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for UnitConfig {
    fn default() -> Self {
        Self {
            hidden_units: 64,
            projection_density: 0.1,
            wta_keep_fraction: 0.5,
            learning_rate: 0.01,
            epochs: 100,
            seed: 0,
        }
    }
}

impl UnitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 {
            return Err(Error::InvalidConfig("hidden_units must be at least 1"));
        }
        if !(self.projection_density > 0.0 && self.projection_density <= 1.0) {
            return Err(Error::InvalidConfig("projection_density must be in (0, 1]"));
        }
        if !(self.wta_keep_fraction > 0.0 && self.wta_keep_fraction <= 1.0) {
            return Err(Error::InvalidConfig("wta_keep_fraction must be in (0, 1]"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive"));
        }
        Ok(())
    }

    /// Number of hidden activations that survive winner-take-all.
    pub fn wta_keep(&self) -> usize {
        let k = libm::ceil(self.wta_keep_fraction * self.hidden_units as f64) as usize;
        k.clamp(1, self.hidden_units)
    }
}

/// Fixed binary projection from the 2048 patch pixels to the hidden layer.
///
/// Stored as one 2048-bit mask per hidden row, plus the set-bit indices used
/// by the forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    hidden: usize,
    mask: Vec<u64>,
    offsets: Vec<usize>,
    taps: Vec<u16>,
}

impl Projection {
    fn random(hidden: usize, density: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut mask = vec![0u64; hidden * WORDS_PER_ROW];
        for row in mask.chunks_exact_mut(WORDS_PER_ROW) {
            for i in 0..PATCH_LEN {
                if rng.random::<f64>() < density {
                    row[i / 64] |= 1 << (i % 64);
                }
            }
            if row.iter().all(|&w| w == 0) {
                let i = rng.random_range(0..PATCH_LEN);
                row[i / 64] |= 1 << (i % 64);
            }
        }
        Self::from_mask_unchecked(hidden, mask)
    }

    fn from_mask_unchecked(hidden: usize, mask: Vec<u64>) -> Self {
        let mut offsets = Vec::with_capacity(hidden + 1);
        let mut taps = Vec::new();
        offsets.push(0);
        for row in mask.chunks_exact(WORDS_PER_ROW) {
            for (w, &word) in row.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    taps.push((w * 64 + b) as u16);
                    bits &= bits - 1;
                }
            }
            offsets.push(taps.len());
        }
        Self { hidden, mask, offsets, taps }
    }

    /// Rebuilds a projection from its bitmask (32 little-endian-bit words per row).
    pub fn from_mask(hidden: usize, mask: Vec<u64>) -> Result<Self> {
        if hidden == 0 || mask.len() != hidden * WORDS_PER_ROW {
            return Err(Error::InvalidConfig("projection mask has the wrong size"));
        }
        if mask.chunks_exact(WORDS_PER_ROW).any(|row| row.iter().all(|&w| w == 0)) {
            return Err(Error::InvalidConfig("projection row without any connection"));
        }
        Ok(Self::from_mask_unchecked(hidden, mask))
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn mask(&self) -> &[u64] {
        &self.mask
    }

    pub fn is_set(&self, row: usize, col: usize) -> bool {
        self.mask[row * WORDS_PER_ROW + col / 64] >> (col % 64) & 1 == 1
    }

    /// Connections of hidden row `row`, ascending.
    pub fn row_taps(&self, row: usize) -> &[u16] {
        &self.taps[self.offsets[row]..self.offsets[row + 1]]
    }

    pub fn connections(&self) -> usize {
        self.taps.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden).map(|j| self.row_taps(j).iter().map(|&i| x[i as usize]).sum()).collect()
    }
}

/// Softmax output of a unit, one entry per place.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Self {
        Self(scores)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the highest score; lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

/// Index of the maximal entry, lowest index on ties. Returns 0 for an empty slice.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Winner-take-all code of one patch: kept hidden indices (ascending) and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    hidden: usize,
    active: Vec<(u16, f64)>,
}

impl SparseCode {
    pub fn active(&self) -> &[(u16, f64)] {
        &self.active
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.hidden];
        for &(j, v) in &self.active {
            h[j as usize] = v;
        }
        h
    }
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in logits.iter_mut() {
        *l = libm::exp(*l - max);
        total += *l;
    }
    for l in logits.iter_mut() {
        *l /= total;
    }
}

/// One place classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct DrosoNetModel {
    n_places: usize,
    config: UnitConfig,
    projection: Projection,
    out_weights: Vec<f64>,
    out_bias: Vec<f64>,
}

impl DrosoNetModel {
    /// Draws the projection and initial output weights from `config.seed`.
    pub fn new(n_places: usize, config: UnitConfig) -> Result<Self> {
        if n_places == 0 {
            return Err(Error::TooFew { what: "places", min: 1, actual: 0 });
        }
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let projection = Projection::random(config.hidden_units, config.projection_density, &mut rng);
        let init = Uniform::new_inclusive(-INIT_WEIGHT_RANGE, INIT_WEIGHT_RANGE)
            .expect("static weight range is valid");
        let out_weights = (0..n_places * config.hidden_units).map(|_| init.sample(&mut rng)).collect();
        Ok(Self { n_places, config, projection, out_weights, out_bias: vec![0.0; n_places] })
    }

    /// Reassembles a model from stored parameters.
    pub fn from_parts(
        config: UnitConfig,
        n_places: usize,
        projection: Projection,
        out_weights: Vec<f64>,
        out_bias: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        if n_places == 0 {
            return Err(Error::TooFew { what: "places", min: 1, actual: 0 });
        }
        if projection.hidden() != config.hidden_units {
            return Err(Error::InvalidConfig("projection height differs from hidden_units"));
        }
        if out_weights.len() != n_places * config.hidden_units || out_bias.len() != n_places {
            return Err(Error::InvalidConfig("output layer has the wrong size"));
        }
        Ok(Self { n_places, config, projection, out_weights, out_bias })
    }

    pub fn n_places(&self) -> usize {
        self.n_places
    }

    pub fn config(&self) -> &UnitConfig {
        &self.config
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    /// Output weights, `n_places x hidden_units` row-major.
    pub fn out_weights(&self) -> &[f64] {
        &self.out_weights
    }

    pub fn out_bias(&self) -> &[f64] {
        &self.out_bias
    }

    pub fn out_weights_mut(&mut self) -> &mut [f64] {
        &mut self.out_weights
    }

    pub fn out_bias_mut(&mut self) -> &mut [f64] {
        &mut self.out_bias
    }

    fn check_patch(patch: &ImageTensor) -> Result<()> {
        if patch.is_patch() {
            Ok(())
        } else {
            Err(Error::PatchShape { rows: patch.rows(), cols: patch.cols() })
        }
    }

    /// Projection followed by winner-take-all. Ties at the cutoff keep the lower index.
    pub fn encode(&self, patch: &ImageTensor) -> Result<SparseCode> {
        Self::check_patch(patch)?;
        debug_assert_eq!(patch.pixels().len(), PATCH_ROWS * PATCH_COLS);
        let h = self.projection.apply(patch.pixels());
        let keep = self.config.wta_keep();
        let mut order: Vec<u16> = (0..h.len() as u16).collect();
        if keep < order.len() {
            let by_rank = |a: &u16, b: &u16| {
                h[*b as usize].partial_cmp(&h[*a as usize]).unwrap_or(Ordering::Equal).then(a.cmp(b))
            };
            order.select_nth_unstable_by(keep - 1, by_rank);
            order.truncate(keep);
            order.sort_unstable();
        }
        let active = order.into_iter().map(|j| (j, h[j as usize])).collect();
        Ok(SparseCode { hidden: h.len(), active })
    }

    /// Pre-softmax outputs for a sparse code.
    pub fn logits(&self, code: &SparseCode) -> Vec<f64> {
        let hidden = self.config.hidden_units;
        self.out_bias
            .iter()
            .zip(self.out_weights.chunks_exact(hidden))
            .map(|(&b, w)| b + code.active.iter().map(|&(j, v)| w[j as usize] * v).sum::<f64>())
            .collect()
    }

    pub fn scores_from_code(&self, code: &SparseCode) -> ScoreVector {
        let mut s = self.logits(code);
        softmax_in_place(&mut s);
        ScoreVector(s)
    }

    /// Scores one 32x64 patch against every place.
    pub fn forward(&self, patch: &ImageTensor) -> Result<ScoreVector> {
        Ok(self.scores_from_code(&self.encode(patch)?))
    }

    fn check_samples(&self, samples: &[(&ImageTensor, usize)]) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::TooFew { what: "training samples", min: 1, actual: 0 });
        }
        for &(patch, label) in samples {
            Self::check_patch(patch)?;
            if label >= self.n_places {
                return Err(Error::LabelOutOfRange { label, n_places: self.n_places });
            }
        }
        Ok(())
    }

    /// Mean cross-entropy over `samples`.
    pub fn loss(&self, samples: &[(&ImageTensor, usize)]) -> Result<f64> {
        self.check_samples(samples)?;
        let mut total = 0.0;
        for &(patch, label) in samples {
            let s = self.forward(patch)?;
            total -= libm::log(s.0[label].max(f64::MIN_POSITIVE));
        }
        Ok(total / samples.len() as f64)
    }

    /// Analytic gradient of the cross-entropy of one sample with respect to
    /// `(out_weights, out_bias)`.
    pub fn gradients(&self, patch: &ImageTensor, label: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_samples(&[(patch, label)])?;
        let code = self.encode(patch)?;
        let h = code.to_dense();
        let mut delta = self.scores_from_code(&code).0;
        delta[label] -= 1.0;
        let mut dw = Vec::with_capacity(self.out_weights.len());
        for &d in &delta {
            dw.extend(h.iter().map(|&hj| d * hj));
        }
        Ok((dw, delta))
    }

    /// Per-sample SGD on cross-entropy for `config.epochs` epochs, with a
    /// seeded shuffle of the sample order in each epoch. Only the output layer
    /// changes.
    pub fn train(&mut self, samples: &[(&ImageTensor, usize)]) -> Result<()> {
        self.check_samples(samples)?;
        let codes = samples
            .iter()
            .map(|&(patch, label)| Ok((self.encode(patch)?, label)))
            .collect::<Result<Vec<_>>>()?;
        let hidden = self.config.hidden_units;
        let lr = self.config.learning_rate;
        let mut order: Vec<usize> = (0..codes.len()).collect();
        for epoch in 0..self.config.epochs {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::epoch_seed(self.config.seed, epoch));
            order.shuffle(&mut rng);
            for &i in &order {
                let (code, label) = &codes[i];
                let mut delta = self.scores_from_code(code).0;
                delta[*label] -= 1.0;
                for (c, &d) in delta.iter().enumerate() {
                    let step = lr * d;
                    let row = &mut self.out_weights[c * hidden..(c + 1) * hidden];
                    for &(j, v) in &code.active {
                        row[j as usize] -= step * v;
                    }
                    self.out_bias[c] -= step;
                }
            }
        }
        Ok(())
    }
}
