//! Grayscale image tensors, bilinear resizing and grid splitting.

use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Rows of the patch a unit consumes.
pub const PATCH_ROWS: usize = 32;
/// Columns of the patch a unit consumes.
pub const PATCH_COLS: usize = 64;
/// Flattened patch length.
pub const PATCH_LEN: usize = PATCH_ROWS * PATCH_COLS;

/// Maximum number of grid cells accepted by [`GridShape::new`].
pub const MAX_GRID_CELLS: usize = 64;

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    /// Wraps `pixels`, checking length and range.
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        let expected = rows * cols;
        if pixels.len() != expected {
            return Err(Error::PixelCount { expected, actual: pixels.len() });
        }
        if let Some(index) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::PixelRange { index });
        }
        Ok(Self { rows, cols, pixels })
    }

    /// Builds an image by evaluating `f(row, col)`; values are clamped to `[0, 1]`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(clamp_unit(f(r, c)));
            }
        }
        Self { rows, cols, pixels }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self::from_fn(rows, cols, |_, _| value)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    /// Copies the `rows x cols` window whose top-left corner is `(top, left)`.
    ///
    /// Panics if the window leaves the image.
    pub fn crop(&self, top: usize, left: usize, rows: usize, cols: usize) -> Self {
        assert!(top + rows <= self.rows && left + cols <= self.cols, "crop out of bounds");
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in top..top + rows {
            let start = r * self.cols + left;
            pixels.extend_from_slice(&self.pixels[start..start + cols]);
        }
        Self { rows, cols, pixels }
    }

    pub fn is_patch(&self) -> bool {
        self.rows == PATCH_ROWS && self.cols == PATCH_COLS
    }
}

#[inline]
pub(crate) fn clamp_unit(v: f64) -> f64 {
    // NaN maps to 0 so that the range invariant cannot be broken.
    if v >= 1.0 {
        1.0
    } else if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Number of grid rows and columns a reference image is cut into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridShape {
    rows: usize,
    cols: usize,
}

impl GridShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        let cells = rows.saturating_mul(cols);
        if rows == 0 || cols == 0 || cells > MAX_GRID_CELLS {
            return Err(Error::GridShape { rows, cols });
        }
        Ok(Self { rows, cols })
    }

    /// The single-cell grid, i.e. whole-image units.
    pub const fn whole() -> Self {
        Self { rows: 1, cols: 1 }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    /// Size of the image that [`split_grid`] resizes to.
    pub fn resized_dims(&self) -> (usize, usize) {
        (PATCH_ROWS * self.rows, PATCH_COLS * self.cols)
    }

    /// Pixel rectangle `(top, left, rows, cols)` of `cell` when this grid is
    /// laid over an image of `img_rows x img_cols`. Cell boundaries are
    /// `floor(k * extent / n)`, so cells tile the image without gaps.
    pub fn cell_bounds(&self, cell: usize, img_rows: usize, img_cols: usize) -> (usize, usize, usize, usize) {
        let (gr, gc) = (cell / self.cols, cell % self.cols);
        let top = gr * img_rows / self.rows;
        let bottom = (gr + 1) * img_rows / self.rows;
        let left = gc * img_cols / self.cols;
        let right = (gc + 1) * img_cols / self.cols;
        (top, left, bottom - top, right - left)
    }
}

impl core::fmt::Display for GridShape {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for GridShape {
    type Err = Error;

    /// Parses `RxC`, e.g. `3x1` or `4X2`.
    fn from_str(s: &str) -> Result<Self> {
        let (r, c) = s.trim().split_once(['x', 'X']).ok_or(Error::Parse("grid must look like RxC"))?;
        let r = r.trim().parse().map_err(|_| Error::Parse("grid rows are not an integer"))?;
        let c = c.trim().parse().map_err(|_| Error::Parse("grid cols are not an integer"))?;
        Self::new(r, c)
    }
}

/// The `r x c` patches of one resized image, row-major by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    shape: GridShape,
    patches: Vec<ImageTensor>,
}

impl PatchGrid {
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn patches(&self) -> &[ImageTensor] {
        &self.patches
    }

    pub fn patch(&self, cell: usize) -> &ImageTensor {
        &self.patches[cell]
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Reassembles the `32r x 64c` image the patches were cut from.
    pub fn stitch(&self) -> ImageTensor {
        let (rows, cols) = self.shape.resized_dims();
        let mut pixels = alloc::vec![0.0; rows * cols];
        for (cell, patch) in self.patches.iter().enumerate() {
            let top = (cell / self.shape.cols) * PATCH_ROWS;
            let left = (cell % self.shape.cols) * PATCH_COLS;
            for r in 0..PATCH_ROWS {
                let dst = (top + r) * cols + left;
                pixels[dst..dst + PATCH_COLS]
                    .copy_from_slice(&patch.pixels[r * PATCH_COLS..(r + 1) * PATCH_COLS]);
            }
        }
        ImageTensor { rows, cols, pixels }
    }
}

/// Source taps for one output coordinate of a bilinear resize.
#[derive(Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    t: f64,
}

fn taps(src: usize, dst: usize) -> Vec<Tap> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            // Half-pixel centres, clamped at the borders.
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(src - 1);
            Tap { lo, hi, t: pos - lo as f64 }
        })
        .collect()
}

/// Bilinear resize to `target_rows x target_cols` using half-pixel centres.
///
/// Resizing to the same dimensions returns an exact copy.
pub fn resize(img: &ImageTensor, target_rows: usize, target_cols: usize) -> Result<ImageTensor> {
    if target_rows == 0 || target_cols == 0 {
        return Err(Error::InvalidConfig("resize target must be at least 1x1"));
    }
    if img.rows == 0 || img.cols == 0 {
        return Err(Error::InvalidConfig("cannot resize an empty image"));
    }
    if img.rows == target_rows && img.cols == target_cols {
        return Ok(img.clone());
    }
    let ys = taps(img.rows, target_rows);
    let xs = taps(img.cols, target_cols);
    let mut pixels = Vec::with_capacity(target_rows * target_cols);
    for y in &ys {
        let top = &img.pixels[y.lo * img.cols..(y.lo + 1) * img.cols];
        let bottom = &img.pixels[y.hi * img.cols..(y.hi + 1) * img.cols];
        for x in &xs {
            let upper = top[x.lo] + (top[x.hi] - top[x.lo]) * x.t;
            let lower = bottom[x.lo] + (bottom[x.hi] - bottom[x.lo]) * x.t;
            pixels.push(clamp_unit(upper + (lower - upper) * y.t));
        }
    }
    Ok(ImageTensor { rows: target_rows, cols: target_cols, pixels })
}

/// Resizes `img` to `32r x 64c` and cuts it into `r * c` patches of 32x64.
pub fn split_grid(img: &ImageTensor, shape: GridShape) -> PatchGrid {
    let (rows, cols) = shape.resized_dims();
    // Both dimensions of the target are nonzero, so resize cannot fail on a non-empty image.
    let resized = resize(img, rows, cols).expect("split_grid needs a non-empty image");
    let patches = (0..shape.cells())
        .map(|cell| {
            let top = (cell / shape.cols) * PATCH_ROWS;
            let left = (cell % shape.cols) * PATCH_COLS;
            resized.crop(top, left, PATCH_ROWS, PATCH_COLS)
        })
        .collect();
    PatchGrid { shape, patches }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_image() -> impl Strategy<Value = ImageTensor> {
        (1usize..40, 1usize..80).prop_flat_map(|(r, c)| {
            proptest::collection::vec(0.0f64..=1.0, r * c)
                .prop_map(move |px| ImageTensor::new(r, c, px).unwrap())
        })
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(matches!(
            ImageTensor::new(2, 2, alloc::vec![0.0; 3]),
            Err(Error::PixelCount { expected: 4, actual: 3 })
        ));
        assert!(matches!(ImageTensor::new(1, 2, alloc::vec![0.0, 1.5]), Err(Error::PixelRange { index: 1 })));
        assert!(ImageTensor::new(1, 1, alloc::vec![f64::NAN]).is_err());
    }

    #[test]
    fn grid_parse_and_limits() {
        assert_eq!("3x1".parse::<GridShape>().unwrap(), GridShape::new(3, 1).unwrap());
        assert_eq!(" 4X2 ".parse::<GridShape>().unwrap().cells(), 8);
        assert!("3".parse::<GridShape>().is_err());
        assert!("0x3".parse::<GridShape>().is_err());
        assert!(GridShape::new(8, 8).is_ok());
        assert!(GridShape::new(9, 8).is_err());
    }

    #[test]
    fn identity_resize_is_bit_exact() {
        let img = ImageTensor::from_fn(32, 64, |r, c| ((r * 7 + c * 13) % 17) as f64 / 16.0);
        let out = resize(&img, 32, 64).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = ImageTensor::filled(7, 13, 0.5);
        for (r, c) in [(1, 1), (32, 64), (5, 200), (96, 3)] {
            let out = resize(&img, r, c).unwrap();
            assert!(out.pixels().iter().all(|p| (p - 0.5).abs() < 1e-6));
        }
    }

    #[test]
    fn checkerboard_downscale_averages_cells() {
        let img = ImageTensor::from_fn(4, 4, |r, c| ((r + c) % 2) as f64);
        let out = resize(&img, 2, 2).unwrap();
        for p in out.pixels() {
            assert!((p - 0.5).abs() < 1e-6, "{p}");
        }
    }

    #[test]
    fn zero_target_is_rejected() {
        let img = ImageTensor::filled(4, 4, 0.0);
        assert!(resize(&img, 0, 3).is_err());
    }

    #[test]
    fn two_by_four_grid_yields_eight_patches() {
        let img = ImageTensor::filled(50, 70, 0.3);
        let grid = split_grid(&img, GridShape::new(2, 4).unwrap());
        assert_eq!(grid.len(), 8);
        assert!(grid.patches().iter().all(ImageTensor::is_patch));
    }

    #[test]
    fn whole_grid_is_plain_resize() {
        let img = ImageTensor::from_fn(45, 90, |r, c| (r as f64 / 45.0) * (c as f64 / 90.0));
        let grid = split_grid(&img, GridShape::whole());
        assert_eq!(grid.len(), 1);
        assert_eq!(grid.patch(0), &resize(&img, 32, 64).unwrap());
    }

    #[test]
    fn horizontal_bands_map_to_constant_patches() {
        let levels = [0.1, 0.5, 0.9];
        let img = ImageTensor::from_fn(96, 64, |r, _| levels[r / 32]);
        let grid = split_grid(&img, GridShape::new(3, 1).unwrap());
        for (patch, level) in grid.patches().iter().zip(levels) {
            assert!(patch.pixels().iter().all(|&p| p == level));
        }
    }

    #[test]
    fn cell_bounds_tile_image() {
        let g = GridShape::new(3, 2).unwrap();
        let mut covered = alloc::vec![0u8; 97 * 101];
        for cell in 0..g.cells() {
            let (t, l, h, w) = g.cell_bounds(cell, 97, 101);
            for r in t..t + h {
                for c in l..l + w {
                    covered[r * 101 + c] += 1;
                }
            }
        }
        assert!(covered.iter().all(|&n| n == 1));
    }

    proptest! {
        #[test]
        fn resize_preserves_range(img in arb_image(), r in 1usize..100, c in 1usize..100) {
            let out = resize(&img, r, c).unwrap();
            prop_assert_eq!(out.pixels().len(), r * c);
            prop_assert!(out.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        }

        #[test]
        fn stitch_reconstructs_resize(img in arb_image(), gr in 1usize..4, gc in 1usize..4) {
            let shape = GridShape::new(gr, gc).unwrap();
            let grid = split_grid(&img, shape);
            let (rows, cols) = shape.resized_dims();
            prop_assert_eq!(grid.stitch(), resize(&img, rows, cols).unwrap());
        }

        #[test]
        fn resize_is_deterministic(img in arb_image(), r in 1usize..50, c in 1usize..50) {
            prop_assert_eq!(resize(&img, r, c).unwrap(), resize(&img, r, c).unwrap());
        }
    }
}
