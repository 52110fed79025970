use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::camera::{CameraModel, DEFAULT_FOV_DEG};
use super::scene::{Scene, Shape};
use crate::nets::LightConfig;
use crate::rng::{self, Rng};
use crate::{math, Error, Result, Vec3};

/// Camera and light sampling parameters for generated views.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewSampling {
    pub width: usize,
    pub height: usize,
    pub fov_deg: f64,
    pub camera_radius: f64,
    pub light_radius: f64,
    /// Light colors uniform in RGB instead of white.
    pub colored_lights: bool,
}

impl Default for ViewSampling {
    fn default() -> Self {
        ViewSampling {
            width: 128,
            height: 128,
            fov_deg: DEFAULT_FOV_DEG,
            camera_radius: 1.5,
            light_radius: 10.0,
            colored_lights: false,
        }
    }
}

/// Uniform point on the upper unit hemisphere with `z > 0`.
pub fn uniform_hemisphere(r: &mut Rng) -> Vec3 {
    // z uniform in (0, 1] gives uniform area density
    let z = 1.0 - r.random::<f64>();
    let phi = 2.0 * PI * r.random::<f64>();
    let s = math::sqrt((1.0 - z * z).max(0.0));
    Vec3::new(s * math::cos(phi), s * math::sin(phi), z)
}

/// One camera on the northern hemisphere looking at the origin, and
/// `n_lights` point lights on the larger northern hemisphere.
pub fn sample_view_and_lights(
    seed: u64,
    n_lights: usize,
    opts: &ViewSampling,
) -> Result<(CameraModel, Vec<LightConfig>)> {
    if n_lights == 0 {
        return Err(Error::InvalidInput(alloc::string::String::from("n_lights must be at least 1")));
    }
    let mut r = rng::seeded(seed);
    let c = uniform_hemisphere(&mut r) * opts.camera_radius;
    let camera = CameraModel::look_at(c, Vec3::ZERO, opts.fov_deg, opts.width, opts.height)?;
    let lights = (0..n_lights)
        .map(|_| {
            let position = uniform_hemisphere(&mut r) * opts.light_radius;
            let color = if opts.colored_lights {
                Vec3::new(r.random(), r.random(), r.random())
            } else {
                Vec3::splat(1.0)
            };
            LightConfig { position, color }
        })
        .collect();
    Ok((camera, lights))
}

fn point_on(shape: &Shape, r: &mut Rng) -> Vec3 {
    match *shape {
        Shape::Sphere { center, radius } => center + uniform_sphere(r) * radius,
        Shape::Cuboid { min, max } => {
            let e = max - min;
            let faces = [e.y * e.z, e.y * e.z, e.x * e.z, e.x * e.z, e.x * e.y, e.x * e.y];
            let f = WeightedIndex::new(faces).expect("positive box faces").sample(r);
            let (u, v) = (r.random::<f64>(), r.random::<f64>());
            let axis = f / 2;
            let fixed = if f % 2 == 0 { min[axis] } else { max[axis] };
            match axis {
                0 => Vec3::new(fixed, min.y + u * e.y, min.z + v * e.z),
                1 => Vec3::new(min.x + u * e.x, fixed, min.z + v * e.z),
                _ => Vec3::new(min.x + u * e.x, min.y + v * e.y, fixed),
            }
        }
        Shape::Cylinder { base, radius, height } => {
            let side = 2.0 * PI * radius * height;
            let cap = PI * radius * radius;
            let pick = r.random::<f64>() * (side + 2.0 * cap);
            if pick < side {
                let phi = 2.0 * PI * r.random::<f64>();
                base + Vec3::new(radius * math::cos(phi), radius * math::sin(phi), height * r.random::<f64>())
            } else {
                let z = if pick < side + cap { 0.0 } else { height };
                let rad = radius * math::sqrt(r.random::<f64>());
                let phi = 2.0 * PI * r.random::<f64>();
                base + Vec3::new(rad * math::cos(phi), rad * math::sin(phi), z)
            }
        }
        Shape::Ground { .. } => unreachable!("ground has no finite area"),
    }
}

fn uniform_sphere(r: &mut Rng) -> Vec3 {
    let z = 2.0 * r.random::<f64>() - 1.0;
    let phi = 2.0 * PI * r.random::<f64>();
    let s = math::sqrt((1.0 - z * z).max(0.0));
    Vec3::new(s * math::cos(phi), s * math::sin(phi), z)
}

/// `n` points distributed uniformly by area over the object primitives.
pub fn sample_surface_points(scene: &Scene, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    let shapes: Vec<&Shape> = scene
        .primitives
        .iter()
        .map(|p| &p.shape)
        .filter(|s| !s.is_ground() && s.surface_area() > 0.0)
        .collect();
    if shapes.is_empty() {
        return Err(Error::InvalidInput(alloc::string::String::from(
            "scene has no object surface to sample",
        )));
    }
    let weights = WeightedIndex::new(shapes.iter().map(|s| s.surface_area()))
        .map_err(|e| Error::InvalidInput(alloc::format!("surface areas: {e}")))?;
    let mut r = rng::seeded(seed);
    Ok((0..n).map(|_| point_on(shapes[weights.sample(&mut r)], &mut r)).collect())
}
