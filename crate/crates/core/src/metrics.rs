//! Image comparison metrics and error heat maps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::image::{RgbImage, RgbaImage8};
use crate::{math, Error, Result};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn check_shapes(a: &RgbImage, b: &RgbImage, mask: Option<&[bool]>) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch {
            op: "metric",
            lhs: vec![a.height, a.width, 3],
            rhs: vec![b.height, b.width, 3],
        });
    }
    if let Some(m) = mask {
        if m.len() != a.pixels.len() {
            return Err(Error::ShapeMismatch {
                op: "metric mask",
                lhs: vec![a.height, a.width],
                rhs: vec![m.len()],
            });
        }
        if !m.iter().any(|&x| x) {
            return Err(Error::Empty("mask"));
        }
    }
    Ok(())
}

fn masked_pairs<'a>(a: &'a RgbImage, b: &'a RgbImage, mask: &'a [bool]) -> impl Iterator<Item = (&'a [f64; 3], &'a [f64; 3])> {
    a.pixels
        .iter()
        .zip(&b.pixels)
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(p, _)| p)
}

/// Mean absolute difference over masked pixels and channels.
pub fn l1_masked(a: &RgbImage, b: &RgbImage, mask: &[bool]) -> Result<f64> {
    check_shapes(a, b, Some(mask))?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (p, q) in masked_pairs(a, b, mask) {
        for c in 0..3 {
            sum += (p[c] - q[c]).abs();
        }
        n += 3;
    }
    Ok(sum / n as f64)
}

/// Peak signal-to-noise ratio in dB for signals in `[0, 1]`; `+inf` for
/// identical images.
pub fn psnr(a: &RgbImage, b: &RgbImage, mask: &[bool]) -> Result<f64> {
    check_shapes(a, b, Some(mask))?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (p, q) in masked_pairs(a, b, mask) {
        for c in 0..3 {
            let d = p[c] - q[c];
            sum += d * d;
        }
        n += 3;
    }
    let mse = sum / n as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * math::log10(mse))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, x) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *x = math::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = w.iter().sum();
    w.map(|x| x / s)
}

/// Separable valid-mode filtering of a `w x h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// averaged over all valid window positions and the three channels.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    check_shapes(a, b, None)?;
    let (w, h) = (a.width, a.height);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidInput(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let k = gaussian_window();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for c in 0..3 {
        let pa: Vec<f64> = a.pixels.iter().map(|p| p[c]).collect();
        let pb: Vec<f64> = b.pixels.iter().map(|p| p[c]).collect();
        let paa: Vec<f64> = pa.iter().map(|x| x * x).collect();
        let pbb: Vec<f64> = pb.iter().map(|x| x * x).collect();
        let pab: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        let mu_a = filter_valid(&pa, w, h, &k);
        let mu_b = filter_valid(&pb, w, h, &k);
        let e_aa = filter_valid(&paa, w, h, &k);
        let e_bb = filter_valid(&pbb, w, h, &k);
        let e_ab = filter_valid(&pab, w, h, &k);
        let mut sum = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
        total += sum / mu_a.len() as f64;
    }
    Ok(total / 3.0)
}

/// [`ssim`] after blacking out every pixel outside `mask` in both images.
pub fn ssim_masked(a: &RgbImage, b: &RgbImage, mask: &[bool]) -> Result<f64> {
    check_shapes(a, b, Some(mask))?;
    let keep = |img: &RgbImage| {
        let pixels = img
            .pixels
            .iter()
            .zip(mask)
            .map(|(p, &m)| if m { *p } else { [0.0; 3] })
            .collect();
        RgbImage::new(img.width, img.height, pixels)
    };
    ssim(&keep(a)?, &keep(b)?)
}

/// Per-pixel mean absolute error mapped linearly from blue (no error) to red
/// (the largest error in the image). Pixels outside the mask are transparent.
pub fn error_map(pred: &RgbImage, gt: &RgbImage, mask: &[bool]) -> Result<RgbaImage8> {
    check_shapes(pred, gt, None)?;
    if mask.len() != pred.pixels.len() {
        return Err(Error::ShapeMismatch {
            op: "error map mask",
            lhs: vec![pred.height, pred.width],
            rhs: vec![mask.len()],
        });
    }
    let err: Vec<f64> = pred
        .pixels
        .iter()
        .zip(&gt.pixels)
        .map(|(p, q)| ((p[0] - q[0]).abs() + (p[1] - q[1]).abs() + (p[2] - q[2]).abs()) / 3.0)
        .collect();
    let max = err
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(e, _)| *e)
        .fold(0.0, f64::max);
    let pixels = err
        .iter()
        .zip(mask)
        .map(|(&e, &m)| {
            if !m {
                return [0, 0, 0, 0];
            }
            let t = if max > 0.0 { e / max } else { 0.0 };
            let r = math::round(255.0 * t) as u8;
            [r, 0, 255 - r, 255]
        })
        .collect();
    Ok(RgbaImage8 {
        width: pred.width,
        height: pred.height,
        pixels,
    })
}

/// Metrics of one evaluated view, serialized as one JSON row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub object_id: alloc::string::String,
    pub view: usize,
    pub light: usize,
    pub l1: f64,
    /// `None` encodes an infinite PSNR (identical images).
    pub psnr: Option<f64>,
    pub ssim: f64,
}

impl MetricRow {
    pub fn compute(
        object_id: alloc::string::String,
        view: usize,
        light: usize,
        pred: &RgbImage,
        gt: &RgbImage,
        mask: &[bool],
    ) -> Result<Self> {
        let p = psnr(pred, gt, mask)?;
        Ok(MetricRow {
            object_id,
            view,
            light,
            l1: l1_masked(pred, gt, mask)?,
            psnr: p.is_finite().then_some(p),
            ssim: ssim_masked(pred, gt, mask)?,
        })
    }
}
