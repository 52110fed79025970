use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::color::srgb_to_linear;
use super::sphere::equidistributed_sphere_points;
use crate::image::RgbImage;
use crate::{math, Error, Result, Vec3};

/// One directional sample of an environment map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSample {
    pub direction: Vec3,
    /// Linear RGB, non-negative.
    pub radiance: Vec3,
}

/// Environment lighting discretized into `K >= 1` directional samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap {
    samples: Vec<EnvSample>,
}

impl EnvironmentMap {
    /// Directions are normalized; zero directions and negative or
    /// non-finite radiance are rejected.
    pub fn new(samples: Vec<EnvSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("environment map"));
        }
        let mut out = Vec::with_capacity(samples.len());
        for s in samples {
            let n = s.direction.norm();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::InvalidInput(format!("bad env direction {:?}", s.direction)));
            }
            let ok = s.radiance.to_array().iter().all(|c| c.is_finite() && *c >= 0.0);
            if !ok {
                return Err(Error::InvalidInput(format!("bad env radiance {:?}", s.radiance)));
            }
            out.push(EnvSample {
                direction: s.direction / n,
                radiance: s.radiance,
            });
        }
        Ok(EnvironmentMap { samples: out })
    }

    pub fn samples(&self) -> &[EnvSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Equirectangular pixel for a unit direction. Row 0 is the `+z` pole;
/// longitude runs from `+x` toward `+y`.
pub fn equirect_pixel(d: Vec3, width: usize, height: usize) -> (usize, usize) {
    let theta = math::acos(d.z.clamp(-1.0, 1.0));
    let mut phi = math::atan2(d.y, d.x);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    let row = ((theta / PI * height as f64) as usize).min(height - 1);
    let col = ((phi / (2.0 * PI) * width as f64) as usize) % width;
    (col, row)
}

/// Samples an sRGB equirectangular map at equidistributed directions.
pub fn env_from_equirect(image: &RgbImage, n_target: usize) -> Result<EnvironmentMap> {
    if image.width < 2 || image.height < 1 || image.pixels.len() != image.width * image.height {
        return Err(Error::InvalidInput(format!(
            "degenerate equirectangular map {}x{}",
            image.width, image.height
        )));
    }
    let samples = equidistributed_sphere_points(n_target)
        .into_iter()
        .map(|d| {
            let (x, y) = equirect_pixel(d, image.width, image.height);
            let c = image.get(x, y);
            EnvSample {
                direction: d,
                radiance: Vec3::new(srgb_to_linear(c[0]), srgb_to_linear(c[1]), srgb_to_linear(c[2])),
            }
        })
        .collect();
    EnvironmentMap::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_map_gives_unit_radiance() {
        let img = RgbImage::filled(32, 16, [1.0; 3]);
        let env = env_from_equirect(&img, 200).unwrap();
        assert_eq!(env.len(), equidistributed_sphere_points(200).len());
        assert!(env.samples().iter().all(|s| s.radiance == Vec3::splat(1.0)));
    }

    #[test]
    fn top_half_white_bottom_black() {
        let (w, h) = (64, 32);
        let pixels = (0..w * h)
            .map(|i| if i / w < h / 2 { [1.0; 3] } else { [0.0; 3] })
            .collect();
        let img = RgbImage::new(w, h, pixels).unwrap();
        let env = env_from_equirect(&img, 300).unwrap();
        for s in env.samples() {
            if s.direction.z > 0.05 {
                assert_eq!(s.radiance, Vec3::splat(1.0));
            } else if s.direction.z < -0.05 {
                assert_eq!(s.radiance, Vec3::ZERO);
            }
        }
    }

    #[test]
    fn pole_and_axes_map_to_expected_pixels() {
        assert_eq!(equirect_pixel(Vec3::Z, 64, 32).1, 0);
        assert_eq!(equirect_pixel(-Vec3::Z, 64, 32).1, 31);
        assert_eq!(equirect_pixel(Vec3::X, 64, 32).0, 0);
        assert_eq!(equirect_pixel(Vec3::Y, 64, 32).0, 16);
    }

    #[test]
    fn rejects_empty_and_degenerate() {
        assert!(EnvironmentMap::new(Vec::new()).is_err());
        assert!(env_from_equirect(&RgbImage::filled(1, 1, [0.5; 3]), 10).is_err());
        let bad = EnvSample {
            direction: Vec3::X,
            radiance: Vec3::new(-1.0, 0.0, 0.0),
        };
        assert!(EnvironmentMap::new(alloc::vec![bad]).is_err());
    }
}
