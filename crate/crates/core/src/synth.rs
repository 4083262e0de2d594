//! Deterministic procedural traverses.
//!
//! Reference `n` is a texture seeded by `(base_seed, n)`: a blend of a few
//! sinusoidal gradients and a coarse block mosaic. Query `n` is reference `n`
//! after an optional lateral shift, global Gaussian noise and a corruption of
//! one grid cell, in that order.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::improc::{clamp_unit, GridShape, ImageTensor};
use crate::seed;

const QUERY_TAG: u64 = 0x7175_6572;
const BURST_SIGMA: f64 = 0.25;
const BRIGHTNESS_DELTA: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorruptMode {
    /// Pixels in the cell are set to 0.
    #[default]
    Blackout,
    /// Strong Gaussian noise inside the cell.
    NoiseBurst,
    /// Constant brightness increase inside the cell.
    BrightnessShift,
}

impl core::str::FromStr for CorruptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "blackout" => Ok(CorruptMode::Blackout),
            "noise_burst" | "noise" => Ok(CorruptMode::NoiseBurst),
            "brightness_shift" | "brightness" => Ok(CorruptMode::BrightnessShift),
            _ => Err(Error::Parse("corruption must be blackout, noise-burst or brightness-shift")),
        }
    }
}

/// One grid cell to corrupt, in the coordinates of `grid` laid over the full image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corruption {
    pub grid: GridShape,
    pub cell: usize,
    pub mode: CorruptMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n_places: usize,
    pub image_rows: usize,
    pub image_cols: usize,
    pub base_seed: u64,
    pub noise_sigma: f64,
    pub corruption: Option<Corruption>,
    /// Positive values move image content to the right.
    pub shift_cols: i32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_places: 50,
            image_rows: 96,
            image_cols: 192,
            base_seed: 0,
            noise_sigma: 0.0,
            corruption: None,
            shift_cols: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_places < 2 {
            return Err(Error::TooFew { what: "places", min: 2, actual: self.n_places });
        }
        if self.image_rows == 0 || self.image_cols == 0 {
            return Err(Error::InvalidConfig("image dimensions must be nonzero"));
        }
        if !(0.0..0.5).contains(&self.noise_sigma) {
            return Err(Error::InvalidConfig("noise_sigma must be in [0, 0.5)"));
        }
        if let Some(c) = self.corruption {
            if c.cell >= c.grid.cells() {
                return Err(Error::InvalidConfig("corrupted cell lies outside its grid"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub references: Vec<ImageTensor>,
    pub queries: Vec<ImageTensor>,
    /// `ground_truth[q]` is the reference index of query `q`.
    pub ground_truth: Vec<usize>,
}

struct Wave {
    fy: f64,
    fx: f64,
    phase: f64,
    amp: f64,
}

/// Texture of place `place`.
pub fn reference_image(spec: &SynthSpec, place: usize) -> ImageTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.base_seed, &[place as u64]));
    let waves: Vec<Wave> = (0..3)
        .map(|_| Wave {
            fy: rng.random_range(0.3..2.5),
            fx: rng.random_range(0.3..3.5),
            phase: rng.random_range(0.0..core::f64::consts::TAU),
            amp: rng.random_range(0.5..1.0),
        })
        .collect();
    let amp_total: f64 = waves.iter().map(|w| w.amp).sum();
    let block_rows = rng.random_range(3..7usize);
    let block_cols = rng.random_range(4..12usize);
    let blocks: Vec<f64> = (0..block_rows * block_cols).map(|_| rng.random::<f64>()).collect();
    let mix = rng.random_range(0.4..0.7);
    let (rows, cols) = (spec.image_rows as f64, spec.image_cols as f64);
    ImageTensor::from_fn(spec.image_rows, spec.image_cols, |r, c| {
        let (y, x) = (r as f64 / rows, c as f64 / cols);
        let wave: f64 = waves
            .iter()
            .map(|w| w.amp * libm::sin(core::f64::consts::TAU * (w.fy * y + w.fx * x) + w.phase))
            .sum::<f64>()
            / amp_total;
        let br = r * block_rows / spec.image_rows;
        let bc = c * block_cols / spec.image_cols;
        let block = blocks[br * block_cols + bc];
        mix * block + (1.0 - mix) * (0.5 + 0.5 * wave)
    })
}

/// Query of place `place`, derived from its reference.
pub fn query_image(spec: &SynthSpec, place: usize, reference: &ImageTensor) -> ImageTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.base_seed, &[QUERY_TAG, place as u64]));
    let (rows, cols) = (reference.rows(), reference.cols());
    let shift = spec.shift_cols as i64;
    let mut pixels: Vec<f64> = if shift == 0 {
        reference.pixels().to_vec()
    } else {
        let mut px = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let src = (c as i64 - shift).clamp(0, cols as i64 - 1) as usize;
                px.push(reference.get(r, src));
            }
        }
        px
    };
    if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        for p in pixels.iter_mut() {
            *p = clamp_unit(*p + noise.sample(&mut rng));
        }
    }
    if let Some(c) = spec.corruption {
        let (top, left, h, w) = c.grid.cell_bounds(c.cell, rows, cols);
        let burst = Normal::new(0.0, BURST_SIGMA).expect("static sigma");
        for r in top..top + h {
            for p in &mut pixels[r * cols + left..r * cols + left + w] {
                *p = match c.mode {
                    CorruptMode::Blackout => 0.0,
                    CorruptMode::NoiseBurst => clamp_unit(*p + burst.sample(&mut rng)),
                    CorruptMode::BrightnessShift => clamp_unit(*p + BRIGHTNESS_DELTA),
                };
            }
        }
    }
    ImageTensor::new(rows, cols, pixels).expect("pixels are clamped")
}

/// Generates the full reference/query traverse pair with identity ground truth.
pub fn generate(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let references: Vec<ImageTensor> = (0..spec.n_places).map(|n| reference_image(spec, n)).collect();
    let queries = references.iter().enumerate().map(|(n, r)| query_image(spec, n, r)).collect();
    Ok(SynthDataset { references, queries, ground_truth: (0..spec.n_places).collect() })
}
