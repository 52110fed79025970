use alloc::vec::Vec;

use super::composite::{composite_lights, CompositeConfig, CompositeMode};
use crate::dataset::View;
use crate::image::RgbImage;
use crate::nets::{Codes, CslfModel, LightConfig};
use crate::oracle::{CameraModel, Ray, Scene};
use crate::{Result, Vec3};

/// Visible object surface of one camera: the pixels to shade, with their
/// surface points and unit directions toward the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<usize>,
    pub points: Vec<Vec3>,
    pub dirs: Vec<Vec3>,
}

impl SurfaceFrame {
    /// Ray-casts the object primitives of `scene` (ground excluded).
    pub fn from_scene(scene: &Scene, camera: &CameraModel) -> Self {
        let mut f = SurfaceFrame {
            width: camera.width,
            height: camera.height,
            pixels: Vec::new(),
            points: Vec::new(),
            dirs: Vec::new(),
        };
        for j in 0..camera.height {
            for i in 0..camera.width {
                let (x, y) = CameraModel::pixel_center(i, j);
                let ray = Ray {
                    origin: camera.center,
                    dir: camera.ray_direction(x, y),
                };
                if let Some(hit) = scene.intersect(&ray, 0.0, f64::INFINITY) {
                    if scene.is_object(hit.primitive) {
                        f.pixels.push(j * camera.width + i);
                        f.points.push(hit.point);
                        f.dirs.push(-ray.dir);
                    }
                }
            }
        }
        f
    }

    /// Unprojects the stored depth of a dataset view.
    pub fn from_view(view: &View) -> Result<Self> {
        let (pixels, points, dirs) = view.surface()?;
        Ok(SurfaceFrame {
            width: view.width(),
            height: view.height(),
            pixels,
            points,
            dirs,
        })
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = alloc::vec![false; self.width * self.height];
        for &p in &self.pixels {
            m[p] = true;
        }
        m
    }

    /// Image with `colors` at the frame pixels over a black background.
    pub fn image(&self, colors: &[[f64; 3]]) -> RgbImage {
        let mut img = RgbImage::filled(self.width, self.height, [0.0; 3]);
        for (&p, c) in self.pixels.iter().zip(colors) {
            img.pixels[p] = *c;
        }
        img
    }
}

/// Neural rendering of a frame. One light is a plain query; several lights
/// are composited per `cfg` (mean of predictions when `cfg` is `None`).
/// Models without light conditioning ignore `lights`.
pub fn render_frame(
    model: &CslfModel,
    frame: &SurfaceFrame,
    lights: &[LightConfig],
    codes: &Codes,
    cfg: Option<&CompositeConfig>,
) -> Result<RgbImage> {
    if frame.pixels.is_empty() {
        return Ok(frame.image(&[]));
    }
    if !model.arch().light_conditioned {
        return Ok(frame.image(&model.predict(&frame.points, &frame.dirs, None, codes)?));
    }
    let colors = match (lights, cfg) {
        ([l], None) => model.predict(&frame.points, &frame.dirs, Some(l), codes)?,
        _ => {
            let eq4 = CompositeConfig {
                mode: CompositeMode::Eq4Mean,
                ..CompositeConfig::default()
            };
            composite_lights(model, &frame.points, &frame.dirs, lights, codes, cfg.unwrap_or(&eq4))?.srgb
        }
    };
    Ok(frame.image(&colors))
}
