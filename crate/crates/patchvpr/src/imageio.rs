//! PNG/JPEG decoding to grayscale tensors, and PNG encoding.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageError, ImageReader};
use patchvpr_core::ImageTensor;

use crate::error::{Error, Result};

fn decode_error(path: &Path, e: ImageError) -> Error {
    match e {
        ImageError::IoError(source) => Error::io(path, source),
        err => Error::Image { path: path.to_path_buf(), err },
    }
}

/// Converts a decoded image to grayscale. Colour pixels use BT.601 luma,
/// `0.299 R + 0.587 G + 0.114 B`, on channels normalised to `[0, 1]`.
pub fn to_tensor(img: &DynamicImage) -> ImageTensor {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<f64> = if img.color().has_color() {
        img.to_rgb16()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0.map(|v| v as f64 / 65535.0);
                ((299.0 * r + 587.0 * g + 114.0 * b) / 1000.0).clamp(0.0, 1.0)
            })
            .collect()
    } else {
        img.to_luma16().pixels().map(|p| p.0[0] as f64 / 65535.0).collect()
    };
    ImageTensor::new(h, w, pixels).expect("decoded pixels are normalised")
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| decode_error(path, e))?;
    Ok(to_tensor(&img))
}

/// Writes an 8-bit grayscale PNG.
pub fn save_png(path: impl AsRef<Path>, img: &ImageTensor) -> Result<()> {
    let path = path.as_ref();
    let bytes = img.pixels().iter().map(|&p| (p * 255.0).round() as u8).collect();
    let gray =
        GrayImage::from_raw(img.cols() as u32, img.rows() as u32, bytes).expect("buffer matches dimensions");
    gray.save_with_format(path, image::ImageFormat::Png).map_err(|e| decode_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage};

    #[test]
    fn luma_weights() {
        let img = DynamicImage::ImageRgb8(RgbImage::from_pixel(1, 1, Rgb([255, 0, 0])));
        assert!((to_tensor(&img).get(0, 0) - 0.299).abs() < 1e-3);
        let img = DynamicImage::ImageRgb8(RgbImage::from_pixel(2, 2, Rgb([255, 255, 255])));
        assert!(to_tensor(&img).pixels().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn png_round_trip_of_8bit_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let img = ImageTensor::from_fn(3, 5, |r, c| ((r * 5 + c) * 17) as f64 / 255.0);
        save_png(&path, &img).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.rows(), 3);
        assert_eq!(back.cols(), 5);
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
