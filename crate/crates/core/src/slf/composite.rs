use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::color::{linear_to_srgb, srgb_to_linear};
use super::envmap::EnvironmentMap;
use crate::nets::{Codes, CslfModel, LightConfig, ModelKind};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeMode {
    /// Arithmetic mean of the per-light sRGB predictions.
    Eq4Mean,
    /// Per-light predictions summed in linear space, scaled by one exposure
    /// factor so the mean linear intensity hits the target, then re-encoded.
    ExposureNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeConfig {
    pub mode: CompositeMode,
    pub target_mean_intensity: f64,
    /// Env directions become point lights at this distance.
    pub light_radius: f64,
    /// Drop env samples below the horizon (`z < 0`).
    pub skip_southern: bool,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        CompositeConfig {
            mode: CompositeMode::ExposureNormalized,
            target_mean_intensity: 0.35,
            light_radius: 10.0,
            skip_southern: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeOutput {
    /// Final sRGB colors, one per input point.
    pub srgb: Vec<[f64; 3]>,
    /// Exposure-scaled linear colors before clamping (exposure mode only).
    pub linear: Option<Vec<[f64; 3]>>,
    /// The single exposure factor (exposure mode only).
    pub exposure: Option<f64>,
}

/// One conditional light-field query: dispatches to the 1-step network or
/// the appearance/lighting composition.
pub fn eval_cslf(
    model: &CslfModel,
    p: Vec3,
    v: Vec3,
    light: Option<&LightConfig>,
    codes: &Codes,
) -> Result<[f64; 3]> {
    Ok(model.predict(&[p], &[v], light, codes)?[0])
}

/// Point lights for an environment map. Radiance is clamped into the
/// `[0, 1]` light-color range.
pub fn env_lights(env: &EnvironmentMap, cfg: &CompositeConfig) -> Vec<LightConfig> {
    env.samples()
        .iter()
        .filter(|s| !(cfg.skip_southern && s.direction.z < 0.0))
        .map(|s| LightConfig {
            position: s.direction * cfg.light_radius,
            color: Vec3::new(s.radiance.x.min(1.0), s.radiance.y.min(1.0), s.radiance.z.min(1.0)),
        })
        .collect()
}

/// Per-light predictions for a set of pixels, appearance features computed
/// once for 2-step models.
pub fn predict_lights(
    model: &CslfModel,
    points: &[Vec3],
    dirs: &[Vec3],
    lights: &[LightConfig],
    codes: &Codes,
    mut each: impl FnMut(usize, &[[f64; 3]]),
) -> Result<()> {
    match model.arch().kind {
        ModelKind::TwoStep => {
            let feats = model.appearance_features(points, codes)?;
            for (k, l) in lights.iter().enumerate() {
                each(k, &model.shade_features(&feats, dirs, Some(l), codes)?);
            }
        }
        ModelKind::OneStep => {
            for (k, l) in lights.iter().enumerate() {
                each(k, &model.predict(points, dirs, Some(l), codes)?);
            }
        }
    }
    Ok(())
}

/// Environment-lit colors for a set of surface samples (typically all
/// masked pixels of one image; the exposure factor is shared by all of them).
pub fn composite_env(
    model: &CslfModel,
    points: &[Vec3],
    dirs: &[Vec3],
    env: &EnvironmentMap,
    codes: &Codes,
    cfg: &CompositeConfig,
) -> Result<CompositeOutput> {
    let lights = env_lights(env, cfg);
    if lights.is_empty() {
        return Err(Error::Empty("environment map"));
    }
    composite_lights(model, points, dirs, &lights, codes, cfg)
}

/// Same as [`composite_env`] for an explicit light list.
pub fn composite_lights(
    model: &CslfModel,
    points: &[Vec3],
    dirs: &[Vec3],
    lights: &[LightConfig],
    codes: &Codes,
    cfg: &CompositeConfig,
) -> Result<CompositeOutput> {
    if lights.is_empty() {
        return Err(Error::Empty("light list"));
    }
    let n = points.len();
    match cfg.mode {
        CompositeMode::Eq4Mean => {
            let mut mean = vec![[0.0; 3]; n];
            predict_lights(model, points, dirs, lights, codes, |k, pred| {
                // running mean: exact for one light and for identical lights
                let w = 1.0 / (k + 1) as f64;
                for (m, p) in mean.iter_mut().zip(pred) {
                    for c in 0..3 {
                        m[c] += (p[c] - m[c]) * w;
                    }
                }
            })?;
            Ok(CompositeOutput {
                srgb: mean,
                linear: None,
                exposure: None,
            })
        }
        CompositeMode::ExposureNormalized => {
            if !(cfg.target_mean_intensity > 0.0 && cfg.target_mean_intensity <= 1.0) {
                return Err(Error::InvalidInput(alloc::format!(
                    "target mean intensity {} outside (0, 1]",
                    cfg.target_mean_intensity
                )));
            }
            let mut sum = vec![[0.0; 3]; n];
            predict_lights(model, points, dirs, lights, codes, |_, pred| {
                for (s, p) in sum.iter_mut().zip(pred) {
                    for c in 0..3 {
                        s[c] += srgb_to_linear(p[c]);
                    }
                }
            })?;
            let (linear, exposure) = normalize_exposure(sum, cfg.target_mean_intensity);
            let srgb = linear
                .iter()
                .map(|p| p.map(|c| linear_to_srgb(c.min(1.0))))
                .collect();
            Ok(CompositeOutput {
                srgb,
                linear: Some(linear),
                exposure: Some(exposure),
            })
        }
    }
}

/// Scales linear colors by one factor so their mean channel intensity equals
/// `target`. An all-black input is returned unchanged with factor 1.
pub fn normalize_exposure(mut linear: Vec<[f64; 3]>, target: f64) -> (Vec<[f64; 3]>, f64) {
    let n = linear.len().max(1) as f64;
    let mean = linear.iter().map(|p| (p[0] + p[1] + p[2]) / 3.0).sum::<f64>() / n;
    if !(mean > 0.0) {
        return (linear, 1.0);
    }
    let scale = target / mean;
    for p in &mut linear {
        for c in p.iter_mut() {
            *c *= scale;
        }
    }
    (linear, scale)
}
