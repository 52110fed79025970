#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cslf::cli::{GenDataArgs, Preset, TrainArgs};
use cslf::config::FlatConfig;
use cslf_core::nets::{Conditioning, ModelKind};

pub fn gen_args(out: &Path, seed: u64) -> GenDataArgs {
    GenDataArgs {
        preset: Preset::SingleView,
        out: out.to_path_buf(),
        seed,
        objects: Some(2),
        views: Some(2),
        lights: Some(2),
        resolution: Some(24),
        cloud_points: Some(64),
    }
}

pub fn tiny_config(conditioning: Conditioning, vae: bool) -> FlatConfig {
    FlatConfig {
        kind: Some(ModelKind::TwoStep),
        conditioning: Some(conditioning),
        vae: Some(vae),
        hidden_dim: Some(16),
        appearance_blocks: Some(1),
        lighting_blocks: Some(1),
        feature_dim: Some(8),
        shape_dim: Some(8),
        image_dim: Some(8),
        pointnet_hidden: Some(8),
        pointnet_blocks: Some(1),
        cloud_points: Some(64),
        image_size: Some(16),
        encoder_channels: Some(vec![4, 4]),
        pixels_per_view: Some(16),
        batch_size: Some(2),
        learning_rate: Some(1e-3),
        steps: Some(3),
        seed: Some(5),
        ..FlatConfig::default()
    }
}

pub fn train_args(data: &Path, out: &Path, config: Option<PathBuf>) -> TrainArgs {
    TrainArgs {
        data: data.to_path_buf(),
        out: out.to_path_buf(),
        config,
        kind: None,
        conditioning: None,
        vae: None,
        hidden_dim: None,
        pixels_per_view: None,
        batch_size: None,
        learning_rate: None,
        beta: None,
        steps: None,
        seed: None,
        max_views: None,
        max_lights: None,
        log: None,
    }
}

/// Generates a tiny dataset and trains a checkpoint on it; returns
/// `(data_dir, checkpoint_path)`.
pub fn fixture(dir: &Path, conditioning: Conditioning, vae: bool) -> (PathBuf, PathBuf) {
    let data = dir.join("data");
    if !data.join("dataset.json").exists() {
        cslf::cli::gen_data(&gen_args(&data, 1)).unwrap();
    }
    let cfg = dir.join(format!("cfg_{}_{vae}.json", conditioning.as_str().replace('+', "")));
    cslf::store::write_json(&cfg, &tiny_config(conditioning, vae)).unwrap();
    let ckpt = dir.join(format!("m_{}_{vae}.cslf", conditioning.as_str().replace('+', "")));
    cslf::cli::train(&train_args(&data, &ckpt, Some(cfg))).unwrap();
    (data, ckpt)
}
