use alloc::vec;
use alloc::vec::Vec;

use super::camera::CameraModel;
use super::scene::{Ray, Scene};
use super::shade::{light_terms, shade, ShadeSettings};
use crate::image::{quantize, RgbImage};
use crate::nets::LightConfig;
use crate::rng;
use crate::slf::linear_to_srgb;

/// Rasters produced by one oracle render.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub width: usize,
    pub height: usize,
    /// 8-bit sRGB, row-major.
    pub rgb: Vec<[u8; 3]>,
    /// Ray depth of the nearest hit (any surface), `+inf` where nothing is hit.
    pub depth: Vec<f32>,
    /// Object pixels (ground plane excluded).
    pub mask: Vec<bool>,
    /// Index of the primitive seen at each pixel, if any.
    pub primitive: Vec<Option<usize>>,
}

impl RenderOutput {
    pub fn image(&self) -> RgbImage {
        RgbImage::from_srgb8(self.width, self.height, &self.rgb).expect("render sizes are consistent")
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Ray-traces `scene` under `lights`; colors are clamped to `[0, 1]` and
/// sRGB-encoded. Soft-shadow jitter is seeded per pixel from `seed`.
pub fn render(
    scene: &Scene,
    camera: &CameraModel,
    lights: &[LightConfig],
    settings: &ShadeSettings,
    seed: u64,
) -> RenderOutput {
    let (w, h) = (camera.width, camera.height);
    let mut out = RenderOutput {
        width: w,
        height: h,
        rgb: vec![[0; 3]; w * h],
        depth: vec![f32::INFINITY; w * h],
        mask: vec![false; w * h],
        primitive: vec![None; w * h],
    };
    for j in 0..h {
        for i in 0..w {
            let idx = j * w + i;
            let (x, y) = CameraModel::pixel_center(i, j);
            let ray = Ray {
                origin: camera.center,
                dir: camera.ray_direction(x, y),
            };
            let Some(hit) = scene.intersect(&ray, 0.0, f64::INFINITY) else {
                continue;
            };
            let v = -ray.dir;
            let c = shade(scene, &hit, v, lights, settings, rng::derive_seed(seed, idx as u64));
            out.rgb[idx] = c.to_array().map(|c| quantize(linear_to_srgb(c.clamp(0.0, 1.0))));
            out.depth[idx] = hit.t as f32;
            out.mask[idx] = scene.is_object(hit.primitive);
            out.primitive[idx] = Some(hit.primitive);
        }
    }
    out
}

/// Oracle shadow state of one pixel for one light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowProbe {
    pub primitive: usize,
    /// `max(nᵀr, 0)` at the surface point.
    pub cosine: f64,
    /// Unoccluded fraction of the area light.
    pub visibility: f64,
}

/// Per-pixel shadow state for a single light, using the same seeds as
/// [`render`] so it matches the rendered image exactly.
pub fn shadow_map(
    scene: &Scene,
    camera: &CameraModel,
    light: &LightConfig,
    settings: &ShadeSettings,
    seed: u64,
) -> Vec<Option<ShadowProbe>> {
    let (w, h) = (camera.width, camera.height);
    let mut out = vec![None; w * h];
    for j in 0..h {
        for i in 0..w {
            let idx = j * w + i;
            let (x, y) = CameraModel::pixel_center(i, j);
            let ray = Ray {
                origin: camera.center,
                dir: camera.ray_direction(x, y),
            };
            let Some(hit) = scene.intersect(&ray, 0.0, f64::INFINITY) else {
                continue;
            };
            if !scene.is_object(hit.primitive) {
                continue;
            }
            let term = light_terms(
                scene,
                &hit,
                -ray.dir,
                core::slice::from_ref(light),
                &settings.shadows,
                rng::derive_seed(seed, idx as u64),
            )[0];
            out[idx] = Some(ShadowProbe {
                primitive: hit.primitive,
                cosine: term.cosine,
                visibility: term.visibility,
            });
        }
    }
    out
}
