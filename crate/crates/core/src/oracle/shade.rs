use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::scene::{Ray, Scene, SurfaceHit};
use crate::nets::LightConfig;
use crate::{math, rng, Vec3};

/// Shadow rays start this far along the ray to avoid self-intersection.
const SHADOW_EPS: f64 = 1e-6;

/// Area-light approximation for shadows: a disk of `light_radius` facing the
/// shaded point, sampled `samples` times. Radius 0 with one sample is the
/// hard point-light test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowSettings {
    pub light_radius: f64,
    pub samples: usize,
}

impl ShadowSettings {
    pub const HARD: ShadowSettings = ShadowSettings {
        light_radius: 0.0,
        samples: 1,
    };
}

impl Default for ShadowSettings {
    fn default() -> Self {
        ShadowSettings {
            light_radius: 0.3,
            samples: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadeSettings {
    /// Uniform background light strength.
    pub ambient: f64,
    pub shadows: ShadowSettings,
}

impl Default for ShadeSettings {
    fn default() -> Self {
        ShadeSettings {
            ambient: 0.2,
            shadows: ShadowSettings::default(),
        }
    }
}

/// Fraction of jittered shadow rays from `p` to a disk around the light that
/// reach it unblocked.
pub fn soft_shadow_visibility(
    scene: &Scene,
    p: Vec3,
    light: &LightConfig,
    light_radius: f64,
    n_samples: usize,
    seed: u64,
) -> f64 {
    let n_samples = n_samples.max(1);
    if light_radius <= 0.0 {
        return if segment_clear(scene, p, light.position) { 1.0 } else { 0.0 };
    }
    let axis = (p - light.position).normalized();
    let u = axis.any_orthonormal();
    let w = axis.cross(u);
    let mut r = rng::seeded(seed);
    let mut clear = 0usize;
    for _ in 0..n_samples {
        // uniform on the disk
        let rad = light_radius * math::sqrt(r.random::<f64>());
        let phi = 2.0 * core::f64::consts::PI * r.random::<f64>();
        let q = light.position + u * (rad * math::cos(phi)) + w * (rad * math::sin(phi));
        if segment_clear(scene, p, q) {
            clear += 1;
        }
    }
    clear as f64 / n_samples as f64
}

fn segment_clear(scene: &Scene, from: Vec3, to: Vec3) -> bool {
    let d = to - from;
    let dist = d.norm();
    if dist <= SHADOW_EPS {
        return true;
    }
    let ray = Ray {
        origin: from,
        dir: d / dist,
    };
    !scene.occluded(&ray, SHADOW_EPS, dist - SHADOW_EPS)
}

/// Per-light terms of the Blinn-Phong model at one surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightTerm {
    /// `max(nᵀr, 0)`
    pub cosine: f64,
    /// Unoccluded fraction in `[0, 1]`.
    pub visibility: f64,
    /// `(diffuse + specular) ⊙ color`, before visibility.
    pub unshadowed: Vec3,
}

pub(crate) fn light_terms(
    scene: &Scene,
    hit: &SurfaceHit,
    v: Vec3,
    lights: &[LightConfig],
    shadows: &ShadowSettings,
    seed: u64,
) -> Vec<LightTerm> {
    let n = hit.normal;
    let m = hit.material;
    lights
        .iter()
        .enumerate()
        .map(|(k, light)| {
            let r = (light.position - hit.point).normalized();
            let cosine = n.dot(r).max(0.0);
            if cosine <= 0.0 {
                return LightTerm {
                    cosine: 0.0,
                    visibility: 0.0,
                    unshadowed: Vec3::ZERO,
                };
            }
            let h = (r + v).normalized();
            let spec = m.specular * math::powf(n.dot(h).max(0.0), m.shininess);
            let unshadowed = (m.albedo * cosine + Vec3::splat(spec)).mul_elem(light.color);
            let visibility = soft_shadow_visibility(
                scene,
                hit.point,
                light,
                shadows.light_radius,
                shadows.samples,
                rng::derive_seed(seed, k as u64),
            );
            LightTerm {
                cosine,
                visibility,
                unshadowed,
            }
        })
        .collect()
}

/// Linear radiance leaving `hit` toward the viewer (`v` points from the
/// surface to the camera): `ambient·albedo + Σ visibility·(diffuse + specular)⊙color`.
/// Not clamped.
pub fn shade(
    scene: &Scene,
    hit: &SurfaceHit,
    v: Vec3,
    lights: &[LightConfig],
    settings: &ShadeSettings,
    seed: u64,
) -> Vec3 {
    let mut total = hit.material.albedo * settings.ambient;
    for term in light_terms(scene, hit, v, lights, &settings.shadows, seed) {
        total += term.unshadowed * term.visibility;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::scene::{Material, Primitive, Shape};
    use alloc::vec;

    fn floor_hit(albedo: Vec3, specular: f64) -> (Scene, SurfaceHit) {
        let material = Material {
            albedo,
            specular,
            shininess: 8.0,
        };
        let scene = Scene::new(vec![Primitive {
            shape: Shape::Cuboid {
                min: Vec3::new(-1.0, -1.0, -1.0),
                max: Vec3::new(1.0, 1.0, 0.0),
            },
            material,
        }]);
        let hit = SurfaceHit {
            point: Vec3::ZERO,
            normal: Vec3::Z,
            material,
            t: 1.0,
            primitive: 0,
        };
        (scene, hit)
    }

    #[test]
    fn head_on_diffuse() {
        let albedo = Vec3::new(0.5, 0.4, 0.3);
        let (scene, hit) = floor_hit(albedo, 0.0);
        let light = LightConfig::white(Vec3::new(0.0, 0.0, 10.0));
        let c = shade(&scene, &hit, Vec3::Z, &[light], &ShadeSettings::default(), 1);
        let expected = albedo + albedo * 0.2;
        assert!((c - expected).norm() < 1e-12, "{c:?}");
    }

    #[test]
    fn occluded_point_gets_only_ambient() {
        let albedo = Vec3::new(0.5, 0.4, 0.3);
        let (mut scene, hit) = floor_hit(albedo, 0.5);
        scene.primitives.push(Primitive {
            shape: Shape::Cuboid {
                min: Vec3::new(-5.0, -5.0, 2.0),
                max: Vec3::new(5.0, 5.0, 3.0),
            },
            material: Material::diffuse(Vec3::splat(0.5)),
        });
        let light = LightConfig::white(Vec3::new(0.0, 0.0, 10.0));
        let c = shade(&scene, &hit, Vec3::Z, &[light], &ShadeSettings::default(), 1);
        assert_eq!(c, albedo * 0.2);
    }

    #[test]
    fn grazing_light_contributes_nothing() {
        let (scene, hit) = floor_hit(Vec3::splat(0.5), 0.9);
        let light = LightConfig::white(Vec3::new(10.0, 0.0, -0.5));
        let terms = light_terms(&scene, &hit, Vec3::Z, &[light], &ShadowSettings::HARD, 0);
        assert_eq!(terms[0].unshadowed, Vec3::ZERO);
        assert_eq!(terms[0].cosine, 0.0);
    }

    #[test]
    fn unoccluded_visibility_is_one() {
        let (scene, _) = floor_hit(Vec3::splat(0.5), 0.0);
        let light = LightConfig::white(Vec3::new(1.0, 2.0, 10.0));
        assert_eq!(soft_shadow_visibility(&scene, Vec3::ZERO, &light, 0.3, 64, 9), 1.0);
        assert_eq!(soft_shadow_visibility(&scene, Vec3::ZERO, &light, 0.0, 1, 9), 1.0);
    }
}
