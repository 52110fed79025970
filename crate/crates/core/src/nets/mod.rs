//! The field and encoder networks: 1-step field, 2-step appearance field and
//! lighting model, residual PointNet shape encoder, convolutional image
//! encoder and the VAE encoder.

mod conv;
mod field;
mod layers;
mod model;
mod pointnet;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use conv::{reparameterize, ConvTrunk, ImageEncoder, VaeEncoder};
pub use field::{FieldNet, FieldNetSpec, OutputActivation};
pub use layers::{Linear, ResBlock};
pub use model::{standard_normal, Codes, Conditioning, CslfModel, GroupInputs, ModelArch, ModelKind, VaeSample};
pub use pointnet::PointNet;

use crate::Vec3;

/// Global shape code `s` produced by the PointNet encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryCode(pub Vec<f64>);

/// Global image code `z` (image encoder output or VAE latent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageCode(pub Vec<f64>);

/// Per-point appearance feature `f` from the appearance field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppearanceFeature(pub Vec<f64>);

impl GeometryCode {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl ImageCode {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// A point light: world position and linear RGB color in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightConfig {
    pub position: Vec3,
    pub color: Vec3,
}

impl LightConfig {
    pub fn white(position: Vec3) -> Self {
        LightConfig {
            position,
            color: Vec3::splat(1.0),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.position.is_finite() && self.color.to_array().iter().all(|c| (0.0..=1.0).contains(c))
    }

    /// Network conditioning vector: position divided by `radius`, then color.
    pub fn features(&self, radius: f64) -> [f64; 6] {
        let p = self.position / radius;
        [p.x, p.y, p.z, self.color.x, self.color.y, self.color.z]
    }
}
