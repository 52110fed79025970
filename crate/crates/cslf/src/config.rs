//! Flat key-value JSON training configuration.
//!
//! Every key is optional; absent keys keep their defaults. Keys:
//!
//! | key | type | default |
//! |---|---|---|
//! | `kind` | `"one_step"` or `"two_step"` | `"two_step"` |
//! | `conditioning` | `"none"`, `"s"`, `"z"`, `"s+z"` | `"none"` |
//! | `vae` | bool | `false` |
//! | `light_conditioned` | bool | `true` |
//! | `hidden_dim` | int | 128 |
//! | `one_step_blocks` | int | 10 |
//! | `appearance_blocks` | int | 6 |
//! | `lighting_blocks` | int | 5 |
//! | `feature_dim` | int | 32 |
//! | `shape_dim`, `image_dim` | int | 128 |
//! | `pointnet_hidden` | int | 128 |
//! | `pointnet_blocks` | int | 5 |
//! | `cloud_points` | int | 2048 |
//! | `image_size` | int | 64 |
//! | `encoder_channels` | int list | `[16, 32, 64, 128]` |
//! | `light_radius` | float | 10 |
//! | `pixels_per_view` | int | 2048 |
//! | `batch_size` | int | 16 |
//! | `learning_rate` | float | 1e-4 |
//! | `beta` | float | 1e-3 |
//! | `steps` | int | 1000 |
//! | `seed` | int | 0 |
//! | `max_views`, `max_lights` | int | all |

use std::path::Path;

use cslf_core::nets::{Conditioning, ModelKind};
use cslf_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::store::read_json;
use crate::Result;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    pub kind: Option<ModelKind>,
    pub conditioning: Option<Conditioning>,
    pub vae: Option<bool>,
    pub light_conditioned: Option<bool>,
    pub hidden_dim: Option<usize>,
    pub one_step_blocks: Option<usize>,
    pub appearance_blocks: Option<usize>,
    pub lighting_blocks: Option<usize>,
    pub feature_dim: Option<usize>,
    pub shape_dim: Option<usize>,
    pub image_dim: Option<usize>,
    pub pointnet_hidden: Option<usize>,
    pub pointnet_blocks: Option<usize>,
    pub cloud_points: Option<usize>,
    pub image_size: Option<usize>,
    pub encoder_channels: Option<Vec<usize>>,
    pub light_radius: Option<f64>,
    pub pixels_per_view: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub beta: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub max_views: Option<usize>,
    pub max_lights: Option<usize>,
}

macro_rules! set {
    ($src:ident, $dst:expr, $($f:ident),*) => {
        $(if let Some(v) = $src.$f.clone() { $dst.$f = v; })*
    };
}

impl FlatConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Keys set in `other` win.
    pub fn merge(mut self, other: &FlatConfig) -> Self {
        let o = other.clone();
        macro_rules! m { ($($f:ident),*) => { $(if o.$f.is_some() { self.$f = o.$f; })* }; }
        m!(kind, conditioning, vae, light_conditioned, hidden_dim, one_step_blocks, appearance_blocks,
           lighting_blocks, feature_dim, shape_dim, image_dim, pointnet_hidden, pointnet_blocks,
           cloud_points, image_size, encoder_channels, light_radius, pixels_per_view, batch_size,
           learning_rate, beta, steps, seed, max_views, max_lights);
        self
    }

    pub fn apply(&self, cfg: &mut TrainConfig) {
        let s = self;
        set!(s, cfg.arch, kind, conditioning, vae, light_conditioned, hidden_dim, one_step_blocks,
             appearance_blocks, lighting_blocks, feature_dim, shape_dim, image_dim, pointnet_hidden,
             pointnet_blocks, cloud_points, image_size, encoder_channels, light_radius);
        set!(s, cfg, pixels_per_view, batch_size, learning_rate, beta, steps, seed);
    }

    pub fn to_train_config(&self) -> TrainConfig {
        let mut c = TrainConfig::default();
        self.apply(&mut c);
        c
    }

    /// Every key filled in from a resolved configuration.
    pub fn resolved(cfg: &TrainConfig, max_views: Option<usize>, max_lights: Option<usize>) -> Self {
        let a = &cfg.arch;
        FlatConfig {
            kind: Some(a.kind),
            conditioning: Some(a.conditioning),
            vae: Some(a.vae),
            light_conditioned: Some(a.light_conditioned),
            hidden_dim: Some(a.hidden_dim),
            one_step_blocks: Some(a.one_step_blocks),
            appearance_blocks: Some(a.appearance_blocks),
            lighting_blocks: Some(a.lighting_blocks),
            feature_dim: Some(a.feature_dim),
            shape_dim: Some(a.shape_dim),
            image_dim: Some(a.image_dim),
            pointnet_hidden: Some(a.pointnet_hidden),
            pointnet_blocks: Some(a.pointnet_blocks),
            cloud_points: Some(a.cloud_points),
            image_size: Some(a.image_size),
            encoder_channels: Some(a.encoder_channels.clone()),
            light_radius: Some(a.light_radius),
            pixels_per_view: Some(cfg.pixels_per_view),
            batch_size: Some(cfg.batch_size),
            learning_rate: Some(cfg.learning_rate),
            beta: Some(cfg.beta),
            steps: Some(cfg.steps),
            seed: Some(cfg.seed),
            max_views,
            max_lights,
        }
    }
}
