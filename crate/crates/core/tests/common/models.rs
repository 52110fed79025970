//! Small networks and random inputs for the network gradient checks.

use super::{check_params, perturb_store, project, random_tensor, TOL};
use cslf_core::autodiff::{Tape, Tensor};
use cslf_core::nets::{reparameterize, Conditioning, CslfModel, GroupInputs, ModelArch, ModelKind};
use cslf_core::{rng, Vec3};
use rand::Rng;

pub fn small_arch(kind: ModelKind, conditioning: Conditioning, vae: bool) -> ModelArch {
    ModelArch {
        kind,
        conditioning,
        vae,
        light_conditioned: true,
        hidden_dim: 8,
        one_step_blocks: 2,
        appearance_blocks: 2,
        lighting_blocks: 2,
        feature_dim: 4,
        shape_dim: 5,
        image_dim: 6,
        pointnet_hidden: 6,
        pointnet_blocks: 2,
        cloud_points: 12,
        image_size: 16,
        encoder_channels: vec![2, 3, 3, 4],
        light_radius: 10.0,
    }
}

pub const GROUPS: usize = 2;
pub const ROWS: usize = 3;

pub struct Inputs {
    pub points: Tensor,
    pub dirs: Tensor,
    pub lights: Tensor,
    pub clouds: Tensor,
    pub images: Tensor,
}

pub fn unit_dirs(r: &mut rng::Rng, n: usize) -> Tensor {
    let data: Vec<f64> = (0..n)
        .flat_map(|_| {
            let v = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(0.1..1.0));
            v.normalized().to_array()
        })
        .collect();
    Tensor::matrix(n, 3, data).unwrap()
}

pub fn inputs(arch: &ModelArch, seed: u64) -> Inputs {
    let mut r = rng::seeded(seed ^ 0xabc);
    let n = arch.image_size;
    Inputs {
        points: random_tensor(&mut r, &[GROUPS * ROWS, 3], -0.5, 0.5),
        dirs: unit_dirs(&mut r, GROUPS * ROWS),
        lights: random_tensor(&mut r, &[GROUPS, 6], 0.0, 1.0),
        clouds: random_tensor(&mut r, &[GROUPS * arch.cloud_points, 3], -0.5, 0.5),
        images: random_tensor(&mut r, &[GROUPS, n, n, 3], 0.0, 1.0),
    }
}

pub fn model(arch: ModelArch, seed: u64) -> CslfModel {
    let mut m = CslfModel::new(arch, seed).unwrap();
    perturb_store(m.store_mut(), seed ^ 0x77, 0.2);
    m
}

/// Full conditioned field graph: encoders feed the field.
pub fn full_graph(m: &CslfModel, t: &mut Tape, x: &Inputs, seed: u64) -> cslf_core::autodiff::Var {
    let a = m.arch().clone();
    let points = t.leaf(x.points.clone());
    let dirs = t.leaf(x.dirs.clone());
    let lights = t.leaf(x.lights.clone());
    let clouds = t.leaf(x.clouds.clone());
    let images = t.leaf(x.images.clone());
    let shape = a
        .conditioning
        .uses_shape()
        .then(|| m.shape_codes(t, clouds, a.cloud_points).unwrap());
    let image = if a.conditioning.uses_image() {
        if a.vae {
            let (mu, lv) = m.vae_posterior(t, images, shape).unwrap();
            let eps = cslf_core::nets::standard_normal(seed, GROUPS * a.image_dim);
            let eps = t.constant(vec![GROUPS, a.image_dim], eps).unwrap();
            Some(reparameterize(t, mu, lv, eps).unwrap())
        } else {
            Some(m.image_codes(t, images).unwrap())
        }
    } else {
        None
    };
    let out = m
        .field_graph(
            t,
            &GroupInputs {
                points,
                dirs,
                lights: Some(lights),
                shape,
                image,
                rows_per_group: ROWS,
            },
        )
        .unwrap();
    project(t, out, seed)
}

pub fn check_model(kind: ModelKind, cond: Conditioning, vae: bool, seed: u64) -> f64 {
    let arch = small_arch(kind, cond, vae);
    let mut m = model(arch, seed);
    let x = inputs(m.arch(), seed);
    let frozen = m.clone();
    let e = check_params(m.store_mut(), 3, seed, move |t, store| {
        let mut mm = frozen.clone();
        mm.store_mut().load_flat(&store.flatten()).unwrap();
        full_graph(&mm, t, &x, seed)
    });
    assert!(e < TOL, "{kind:?} {cond:?} vae={vae} seed {seed}: {e}");
    e
}
