use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Floating-point RGB raster, row-major, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{width}x{height} image with {} pixels",
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: [f64; 3]) -> Self {
        RgbImage {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }

    pub fn from_srgb8(width: usize, height: usize, data: &[[u8; 3]]) -> Result<Self> {
        let pixels = data
            .iter()
            .map(|p| p.map(|c| f64::from(c) / 255.0))
            .collect();
        RgbImage::new(width, height, pixels)
    }

    /// Rounds to 8 bits after clamping to `[0, 1]`.
    pub fn to_srgb8(&self) -> Vec<[u8; 3]> {
        self.pixels.iter().map(|p| p.map(quantize)).collect()
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    /// Channel-interleaved values, `[h, w, 3]` layout.
    pub fn flat(&self) -> Vec<f64> {
        self.pixels.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn mean_intensity(&self) -> f64 {
        let s: f64 = self.pixels.iter().map(|p| (p[0] + p[1] + p[2]) / 3.0).sum();
        s / self.pixels.len() as f64
    }
}

pub fn quantize(c: f64) -> u8 {
    let c = if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) };
    libm::round(c * 255.0) as u8
}

/// 8-bit RGBA raster (used for error heat maps).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbaImage8 {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 4]>,
}

/// Box-filter resample to `width x height`. Each output pixel averages the
/// source pixels whose centers fall inside its footprint.
pub fn resize_box(img: &RgbImage, width: usize, height: usize) -> Result<RgbImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput(format!("resize to {width}x{height}")));
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }
    let span = |o: usize, n_out: usize, n_in: usize| {
        let lo = o * n_in / n_out;
        let hi = ((o + 1) * n_in / n_out).max(lo + 1).min(n_in);
        (lo, hi)
    };
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        let (y0, y1) = span(y, height, img.height);
        for x in 0..width {
            let (x0, x1) = span(x, width, img.width);
            let mut acc = [0.0; 3];
            for sy in y0..y1 {
                for sx in x0..x1 {
                    let p = img.get(sx, sy);
                    for c in 0..3 {
                        acc[c] += p[c];
                    }
                }
            }
            let n = ((y1 - y0) * (x1 - x0)) as f64;
            pixels.push(acc.map(|a| a / n));
        }
    }
    RgbImage::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_clamps_and_rounds() {
        assert_eq!(quantize(-1.0), 0);
        assert_eq!(quantize(f64::NAN), 0);
        assert_eq!(quantize(2.0), 255);
        assert_eq!(quantize(0.5), 128);
    }

    #[test]
    fn srgb8_round_trip_is_lossless() {
        let data: Vec<[u8; 3]> = (0..=255u8).map(|v| [v, 255 - v, v / 2]).collect();
        let img = RgbImage::from_srgb8(16, 16, &data).unwrap();
        assert_eq!(img.to_srgb8(), data);
    }

    #[test]
    fn box_resize_halves_by_averaging() {
        let img = RgbImage::new(2, 2, vec![[0.0; 3], [1.0; 3], [1.0; 3], [0.0; 3]]).unwrap();
        let r = resize_box(&img, 1, 1).unwrap();
        assert_eq!(r.pixels, vec![[0.5; 3]]);
        assert_eq!(resize_box(&img, 2, 2).unwrap(), img);
    }
}
