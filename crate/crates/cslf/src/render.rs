//! One code path from a render description to an image, shared by the CLI
//! and the HTTP service.

use cslf_core::dataset::{encoder_image, object_cloud, DatasetPreset};
use cslf_core::image::RgbImage;
use cslf_core::nets::{standard_normal, Codes, CslfModel, ImageCode, LightConfig};
use cslf_core::oracle::{CameraModel, Scene, SceneKind};
use cslf_core::slf::{env_lights, render_frame, CompositeConfig, CompositeMode, EnvironmentMap, SurfaceFrame};
use cslf_core::{rng, Vec3};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::{Error, Result};

/// Where the image code `z` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Latent {
    Z { z: Vec<f64> },
    Seed { seed: u64 },
}

impl Latent {
    pub fn resolve(&self, dim: usize) -> Result<Vec<f64>> {
        match self {
            Latent::Z { z } if z.len() != dim => Err(Error::Usage(format!("latent has {} values, model expects {dim}", z.len()))),
            Latent::Z { z } if z.iter().any(|v| !v.is_finite()) => Err(Error::Usage(String::from("latent is not finite"))),
            Latent::Z { z } => Ok(z.clone()),
            Latent::Seed { seed } => Ok(sample_latent(*seed, dim)),
        }
    }
}

/// Prior draw `z ~ N(0, I)` for a request seed.
pub fn sample_latent(seed: u64, dim: usize) -> Vec<f64> {
    standard_normal(rng::derive_seed(seed, 0x1a7e), dim)
}

#[derive(Debug, Clone)]
pub enum Lighting {
    /// Point lights; several lights are composited per `mode` (mean of the
    /// single-light predictions when unset).
    Lights { lights: Vec<LightConfig>, mode: Option<CompositeMode> },
    Env { map: EnvironmentMap, mode: CompositeMode },
}

#[derive(Debug, Clone)]
pub struct RenderJob {
    pub camera: CameraModel,
    pub lighting: Lighting,
    pub object_id: String,
    pub latent: Option<Latent>,
}

/// Object geometry and identity parsed from an object id.
pub fn parse_object(object_id: &str) -> Result<(SceneKind, u64)> {
    SceneKind::parse_object_id(object_id).map_err(|e| Error::Usage(e.to_string()))
}

/// Preset describing how the reference input view of an object is rendered.
fn reference_preset(ckpt: &Checkpoint, kind: SceneKind) -> DatasetPreset {
    let base = ckpt.header.dataset.unwrap_or_else(DatasetPreset::single_view);
    DatasetPreset { kind, ..base }
}

/// Encoder input of an object when none is supplied: view 0 under light 0,
/// rendered exactly as the training data generator renders it.
pub fn reference_image(ckpt: &Checkpoint, kind: SceneKind, seed: u64) -> Result<RgbImage> {
    let preset = reference_preset(ckpt, kind);
    let scene = Scene::from_kind(kind, seed);
    let view = preset.render_view(&scene, seed, 0)?;
    Ok(encoder_image(&view, 0, ckpt.model.arch().image_size)?)
}

/// Codes the checkpoint's model needs to render an object. An explicit
/// latent replaces the encoded reference image.
pub fn object_codes(ckpt: &Checkpoint, object_id: &str, latent: Option<&Latent>) -> Result<Codes> {
    let model = &ckpt.model;
    let arch = model.arch();
    let (kind, seed) = parse_object(object_id)?;
    let cloud = if arch.conditioning.uses_shape() {
        Some(object_cloud(kind, seed, arch.cloud_points)?)
    } else {
        None
    };
    match latent.filter(|_| arch.conditioning.uses_image()) {
        Some(l) => Ok(Codes {
            shape: cloud.as_deref().map(|c| model.encode_shape(c)).transpose()?,
            image: Some(ImageCode(l.resolve(arch.image_dim)?)),
        }),
        None => {
            let img = if arch.conditioning.uses_image() {
                Some(reference_image(ckpt, kind, seed)?)
            } else {
                None
            };
            Ok(model.object_codes(cloud.as_deref(), img.as_ref())?)
        }
    }
}

pub fn camera_look_at(position: Vec3, target: Vec3, fov_deg: f64, width: usize, height: usize) -> Result<CameraModel> {
    Ok(CameraModel::look_at(position, target, fov_deg, width, height)?)
}

/// Renders `job` with the checkpoint's model over the oracle geometry.
pub fn render(ckpt: &Checkpoint, job: &RenderJob) -> Result<RgbImage> {
    let model: &CslfModel = &ckpt.model;
    let codes = object_codes(ckpt, &job.object_id, job.latent.as_ref())?;
    let (kind, seed) = parse_object(&job.object_id)?;
    let frame = SurfaceFrame::from_scene(&Scene::from_kind(kind, seed), &job.camera);
    let img = match &job.lighting {
        Lighting::Lights { lights, mode } => {
            if lights.is_empty() {
                return Err(Error::Usage(String::from("lights: at least one light is required")));
            }
            if let Some(bad) = lights.iter().find(|l| !l.is_valid()) {
                return Err(Error::Usage(format!("lights: invalid light {bad:?}")));
            }
            let cfg = mode.map(|mode| CompositeConfig {
                mode,
                light_radius: model.arch().light_radius,
                ..CompositeConfig::default()
            });
            render_frame(model, &frame, lights, &codes, cfg.as_ref())?
        }
        Lighting::Env { map, mode } => {
            let cfg = CompositeConfig {
                mode: *mode,
                light_radius: model.arch().light_radius,
                ..CompositeConfig::default()
            };
            let lights = env_lights(map, &cfg);
            if lights.is_empty() {
                return Err(Error::Usage(String::from("environment map has no usable samples")));
            }
            render_frame(model, &frame, &lights, &codes, Some(&cfg))?
        }
    };
    Ok(img)
}

/// Parses `x,y,z` or `x,y,z,r,g,b` (white when the color is omitted).
pub fn parse_light(spec: &str) -> Result<LightConfig> {
    let vals: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Usage(format!("invalid light `{spec}`: expected x,y,z[,r,g,b]")))?;
    let light = match vals[..] {
        [x, y, z] => LightConfig::white(Vec3::new(x, y, z)),
        [x, y, z, r, g, b] => LightConfig {
            position: Vec3::new(x, y, z),
            color: Vec3::new(r, g, b),
        },
        _ => return Err(Error::Usage(format!("invalid light `{spec}`: expected 3 or 6 numbers"))),
    };
    if !light.is_valid() {
        return Err(Error::Usage(format!("invalid light `{spec}`: color must lie in [0, 1] and values be finite")));
    }
    Ok(light)
}

/// Cameras on a circle around the origin at a fixed elevation.
pub fn orbit(n: usize, radius: f64, elevation_deg: f64, fov_deg: f64, width: usize, height: usize) -> Result<Vec<CameraModel>> {
    let el = elevation_deg.to_radians();
    (0..n)
        .map(|k| {
            let az = std::f64::consts::TAU * k as f64 / n as f64;
            let c = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()) * radius;
            camera_look_at(c, Vec3::ZERO, fov_deg, width, height)
        })
        .collect()
}
