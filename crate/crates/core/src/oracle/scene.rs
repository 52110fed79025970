use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{math, rng, Error, Result, Vec3};

/// Blinn-Phong material with constant parameters per primitive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub albedo: Vec3,
    pub specular: f64,
    pub shininess: f64,
}

impl Material {
    pub fn diffuse(albedo: Vec3) -> Self {
        Material {
            albedo,
            specular: 0.0,
            shininess: 1.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.albedo.to_array().iter().all(|c| (0.0..=1.0).contains(c))
            && (0.0..=1.0).contains(&self.specular)
            && self.shininess >= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    /// Axis-aligned box.
    Cuboid { min: Vec3, max: Vec3 },
    /// Closed cylinder along `+z` starting at `base`.
    Cylinder { base: Vec3, radius: f64, height: f64 },
    /// Infinite plane `z = height`; never part of the object mask.
    Ground { height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub material: Material,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit length.
    pub dir: Vec3,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub point: Vec3,
    /// Outward unit normal.
    pub normal: Vec3,
    pub material: Material,
    pub t: f64,
    /// Index of the primitive that was hit.
    pub primitive: usize,
}

fn ray_sphere(ray: &Ray, c: Vec3, r: f64, tmin: f64, tmax: f64) -> Option<(f64, Vec3)> {
    let oc = ray.origin - c;
    let b = oc.dot(ray.dir);
    let cc = oc.norm_squared() - r * r;
    let disc = b * b - cc;
    if disc < 0.0 {
        return None;
    }
    let s = math::sqrt(disc);
    for t in [-b - s, -b + s] {
        if t > tmin && t < tmax {
            return Some((t, (ray.at(t) - c) / r));
        }
    }
    None
}

fn ray_box(ray: &Ray, lo: Vec3, hi: Vec3, tmin: f64, tmax: f64) -> Option<(f64, Vec3)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut near_axis = 0;
    let mut far_axis = 0;
    for a in 0..3 {
        let (o, d) = (ray.origin[a], ray.dir[a]);
        if d == 0.0 {
            if o < lo[a] || o > hi[a] {
                return None;
            }
            continue;
        }
        let (mut t0, mut t1) = ((lo[a] - o) / d, (hi[a] - o) / d);
        if t0 > t1 {
            core::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_near {
            t_near = t0;
            near_axis = a;
        }
        if t1 < t_far {
            t_far = t1;
            far_axis = a;
        }
    }
    if t_near > t_far {
        return None;
    }
    let axis_normal = |a: usize, sign: f64| match a {
        0 => Vec3::new(sign, 0.0, 0.0),
        1 => Vec3::new(0.0, sign, 0.0),
        _ => Vec3::new(0.0, 0.0, sign),
    };
    if t_near > tmin && t_near < tmax {
        let sign = if ray.dir[near_axis] > 0.0 { -1.0 } else { 1.0 };
        return Some((t_near, axis_normal(near_axis, sign)));
    }
    if t_far > tmin && t_far < tmax {
        let sign = if ray.dir[far_axis] > 0.0 { 1.0 } else { -1.0 };
        return Some((t_far, axis_normal(far_axis, sign)));
    }
    None
}

fn ray_cylinder(ray: &Ray, base: Vec3, r: f64, h: f64, tmin: f64, tmax: f64) -> Option<(f64, Vec3)> {
    let mut best: Option<(f64, Vec3)> = None;
    let mut consider = |t: f64, n: Vec3| {
        if t > tmin && t < tmax && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, n));
        }
    };
    let (ox, oy) = (ray.origin.x - base.x, ray.origin.y - base.y);
    let (dx, dy) = (ray.dir.x, ray.dir.y);
    let a = dx * dx + dy * dy;
    if a > 0.0 {
        let b = ox * dx + oy * dy;
        let c = ox * ox + oy * oy - r * r;
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let s = math::sqrt(disc);
            for t in [(-b - s) / a, (-b + s) / a] {
                let z = ray.origin.z + t * ray.dir.z - base.z;
                if (0.0..=h).contains(&z) {
                    let n = Vec3::new(ox + t * dx, oy + t * dy, 0.0) / r;
                    consider(t, n);
                }
            }
        }
    }
    if ray.dir.z != 0.0 {
        for (zc, nz) in [(base.z, -1.0), (base.z + h, 1.0)] {
            let t = (zc - ray.origin.z) / ray.dir.z;
            let (px, py) = (ox + t * dx, oy + t * dy);
            if px * px + py * py <= r * r {
                consider(t, Vec3::new(0.0, 0.0, nz));
            }
        }
    }
    best
}

impl Shape {
    pub fn intersect(&self, ray: &Ray, tmin: f64, tmax: f64) -> Option<(f64, Vec3)> {
        match *self {
            Shape::Sphere { center, radius } => ray_sphere(ray, center, radius, tmin, tmax),
            Shape::Cuboid { min, max } => ray_box(ray, min, max, tmin, tmax),
            Shape::Cylinder { base, radius, height } => ray_cylinder(ray, base, radius, height, tmin, tmax),
            Shape::Ground { height } => {
                if ray.dir.z == 0.0 {
                    return None;
                }
                let t = (height - ray.origin.z) / ray.dir.z;
                (t > tmin && t < tmax).then_some((t, Vec3::Z))
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, Shape::Ground { .. })
    }

    pub fn surface_area(&self) -> f64 {
        use core::f64::consts::PI;
        match *self {
            Shape::Sphere { radius, .. } => 4.0 * PI * radius * radius,
            Shape::Cuboid { min, max } => {
                let e = max - min;
                2.0 * (e.x * e.y + e.y * e.z + e.x * e.z)
            }
            Shape::Cylinder { radius, height, .. } => 2.0 * PI * radius * height + 2.0 * PI * radius * radius,
            Shape::Ground { .. } => 0.0,
        }
    }

    /// Unsigned distance from `p` to this primitive's surface.
    pub fn surface_distance(&self, p: Vec3) -> f64 {
        match *self {
            Shape::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
            Shape::Cuboid { min, max } => {
                let c = (min + max) * 0.5;
                let half = (max - min) * 0.5;
                let d = Vec3::new((p.x - c.x).abs(), (p.y - c.y).abs(), (p.z - c.z).abs()) - half;
                let outside = d.max_elem(Vec3::ZERO).norm();
                let inside = d.x.max(d.y).max(d.z).min(0.0);
                (outside + inside).abs()
            }
            Shape::Cylinder { base, radius, height } => {
                let (dx, dy) = (p.x - base.x, p.y - base.y);
                let radial = math::sqrt(dx * dx + dy * dy) - radius;
                let axial = (p.z - base.z - height / 2.0).abs() - height / 2.0;
                let (ro, ao) = (radial.max(0.0), axial.max(0.0));
                let outside = math::sqrt(ro * ro + ao * ao);
                let inside = radial.max(axial).min(0.0);
                (outside + inside).abs()
            }
            Shape::Ground { height } => (p.z - height).abs(),
        }
    }
}

/// Procedural object families; an object is `(kind, seed)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    /// Mostly diffuse single-material sphere.
    Sphere,
    /// High-specular sphere for highlight tests.
    SpecularSphere,
    /// Seat, back and four legs.
    Chair,
    /// Chair with armrests over a ground plane (self-shadowing).
    ShadowChair,
    /// Randomized chair-like composite with random part colors.
    Object,
}

impl SceneKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SceneKind::Sphere => "sphere",
            SceneKind::SpecularSphere => "specular-sphere",
            SceneKind::Chair => "chair",
            SceneKind::ShadowChair => "shadow-chair",
            SceneKind::Object => "object",
        }
    }

    /// Object identifier, e.g. `chair-000042`.
    pub fn object_id(self, seed: u64) -> String {
        format!("{}-{seed:06}", self.as_str())
    }

    /// Parses an identifier produced by [`object_id`](Self::object_id).
    pub fn parse_object_id(id: &str) -> Result<(SceneKind, u64)> {
        let (kind, seed) = id
            .rsplit_once('-')
            .ok_or_else(|| Error::InvalidInput(format!("malformed object id `{id}`")))?;
        let seed = seed
            .parse::<u64>()
            .map_err(|_| Error::InvalidInput(format!("malformed object id `{id}`")))?;
        Ok((kind.parse()?, seed))
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SceneKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sphere" => SceneKind::Sphere,
            "specular-sphere" => SceneKind::SpecularSphere,
            "chair" => SceneKind::Chair,
            "shadow-chair" => SceneKind::ShadowChair,
            "object" => SceneKind::Object,
            other => return Err(Error::InvalidInput(format!("unknown scene kind `{other}`"))),
        })
    }
}

/// Immutable collection of primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
}

const LEG_BOTTOM: f64 = -0.5;

struct ChairLayout {
    armrests: bool,
    back: bool,
    ground: bool,
    seat: Material,
    legs: Material,
    back_mat: Material,
    arms: Material,
}

impl Scene {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Scene { primitives }
    }

    pub fn empty() -> Self {
        Scene::new(Vec::new())
    }

    pub fn from_kind(kind: SceneKind, seed: u64) -> Scene {
        match kind {
            SceneKind::Sphere => Scene::new(vec![Primitive {
                shape: Shape::Sphere {
                    center: Vec3::ZERO,
                    radius: 0.5,
                },
                material: Material {
                    albedo: Vec3::new(0.8, 0.35, 0.2),
                    specular: 0.2,
                    shininess: 16.0,
                },
            }]),
            SceneKind::SpecularSphere => Scene::specular_sphere(),
            SceneKind::Chair => Scene::chair(seed, false, false),
            SceneKind::ShadowChair => Scene::chair(seed, true, true),
            SceneKind::Object => Scene::random_object(seed),
        }
    }

    /// Dark, highly specular sphere whose brightest point is the highlight.
    pub fn specular_sphere() -> Scene {
        Scene::new(vec![Primitive {
            shape: Shape::Sphere {
                center: Vec3::ZERO,
                radius: 0.5,
            },
            material: Material {
                albedo: Vec3::new(0.25, 0.25, 0.3),
                specular: 0.9,
                shininess: 24.0,
            },
        }])
    }

    /// Chair with fixed colors and seed-dependent proportions.
    pub fn chair(seed: u64, armrests: bool, ground: bool) -> Scene {
        Scene::build_chair(
            seed,
            ChairLayout {
                armrests,
                back: true,
                ground,
                seat: Material {
                    albedo: Vec3::new(0.75, 0.25, 0.2),
                    specular: 0.15,
                    shininess: 12.0,
                },
                legs: Material::diffuse(Vec3::new(0.35, 0.25, 0.15)),
                back_mat: Material {
                    albedo: Vec3::new(0.2, 0.45, 0.7),
                    specular: 0.15,
                    shininess: 12.0,
                },
                arms: Material::diffuse(Vec3::new(0.8, 0.8, 0.75)),
            },
        )
    }

    /// Chair-like object with random proportions, parts and colors.
    pub fn random_object(seed: u64) -> Scene {
        let mut r = rng::seeded(rng::derive_seed(seed, 0x0b1ec7));
        let color = |r: &mut rng::Rng| {
            Vec3::new(
                r.random_range(0.1..0.9),
                r.random_range(0.1..0.9),
                r.random_range(0.1..0.9),
            )
        };
        let seat = color(&mut r);
        let legs = color(&mut r);
        let back = if r.random_bool(0.5) { seat } else { color(&mut r) };
        let spec = r.random_range(0.0..0.4);
        let layout = ChairLayout {
            armrests: r.random_bool(0.4),
            back: r.random_bool(0.85),
            ground: false,
            seat: Material {
                albedo: seat,
                specular: spec,
                shininess: 16.0,
            },
            legs: Material::diffuse(legs),
            back_mat: Material {
                albedo: back,
                specular: spec,
                shininess: 16.0,
            },
            arms: Material::diffuse(legs),
        };
        Scene::build_chair(rng::derive_seed(seed, 0x5ba9e), layout)
    }

    fn build_chair(seed: u64, layout: ChairLayout) -> Scene {
        let mut r = rng::seeded(seed);
        let wx = r.random_range(0.28..0.4);
        let wy = r.random_range(0.28..0.4);
        let seat_z = r.random_range(-0.12..0.02);
        let thick = r.random_range(0.05..0.09);
        let leg_r = r.random_range(0.025..0.05);
        let back_t = r.random_range(0.04..0.08);
        let mut prims = Vec::new();
        let seat_top = seat_z + thick;
        prims.push(Primitive {
            shape: Shape::Cuboid {
                min: Vec3::new(-wx, -wy, seat_z),
                max: Vec3::new(wx, wy, seat_top),
            },
            material: layout.seat,
        });
        let inset = leg_r + 0.02;
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
            prims.push(Primitive {
                shape: Shape::Cylinder {
                    base: Vec3::new(sx * (wx - inset), sy * (wy - inset), LEG_BOTTOM),
                    radius: leg_r,
                    height: seat_z - LEG_BOTTOM,
                },
                material: layout.legs,
            });
        }
        if layout.back {
            let top = r.random_range(0.38..0.5);
            prims.push(Primitive {
                shape: Shape::Cuboid {
                    min: Vec3::new(-wx, -wy, seat_top),
                    max: Vec3::new(wx, -wy + back_t, top),
                },
                material: layout.back_mat,
            });
        }
        if layout.armrests {
            let arm_z = seat_top + r.random_range(0.16..0.24);
            let arm_w = r.random_range(0.05..0.09);
            for sx in [-1.0, 1.0] {
                let (x0, x1) = if sx < 0.0 { (-wx, -wx + arm_w) } else { (wx - arm_w, wx) };
                prims.push(Primitive {
                    shape: Shape::Cuboid {
                        min: Vec3::new(x0, -wy, arm_z),
                        max: Vec3::new(x1, wy, arm_z + 0.035),
                    },
                    material: layout.arms,
                });
                prims.push(Primitive {
                    shape: Shape::Cuboid {
                        min: Vec3::new(x0, wy - 0.05, seat_top),
                        max: Vec3::new(x1, wy, arm_z),
                    },
                    material: layout.arms,
                });
            }
        }
        if layout.ground {
            prims.push(Primitive {
                shape: Shape::Ground { height: LEG_BOTTOM },
                material: Material::diffuse(Vec3::splat(0.6)),
            });
        }
        Scene::new(prims)
    }

    /// Nearest hit with `t` in `(tmin, tmax)`.
    pub fn intersect(&self, ray: &Ray, tmin: f64, tmax: f64) -> Option<SurfaceHit> {
        let mut best: Option<(f64, Vec3, usize)> = None;
        let mut limit = tmax;
        for (i, prim) in self.primitives.iter().enumerate() {
            if let Some((t, n)) = prim.shape.intersect(ray, tmin, limit) {
                limit = t;
                best = Some((t, n, i));
            }
        }
        best.map(|(t, normal, i)| SurfaceHit {
            point: ray.at(t),
            normal,
            material: self.primitives[i].material,
            t,
            primitive: i,
        })
    }

    /// Whether anything blocks the open segment `(tmin, tmax)` of `ray`.
    pub fn occluded(&self, ray: &Ray, tmin: f64, tmax: f64) -> bool {
        self.primitives
            .iter()
            .any(|p| p.shape.intersect(ray, tmin, tmax).is_some())
    }

    /// Distance from `p` to the closest primitive surface.
    pub fn surface_distance(&self, p: Vec3) -> f64 {
        self.primitives
            .iter()
            .map(|pr| pr.shape.surface_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Total surface area of the object primitives (ground excluded).
    pub fn object_area(&self) -> f64 {
        self.primitives
            .iter()
            .filter(|p| !p.shape.is_ground())
            .map(|p| p.shape.surface_area())
            .sum()
    }

    pub fn is_object(&self, primitive: usize) -> bool {
        !self.primitives[primitive].shape.is_ground()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn object_ids_round_trip() {
        for kind in [
            SceneKind::Sphere,
            SceneKind::SpecularSphere,
            SceneKind::Chair,
            SceneKind::ShadowChair,
            SceneKind::Object,
        ] {
            let id = kind.object_id(42);
            assert_eq!(SceneKind::parse_object_id(&id).unwrap(), (kind, 42));
        }
        assert!(SceneKind::parse_object_id("table-1").is_err());
        assert!(SceneKind::parse_object_id("chair").is_err());
    }

    #[test]
    fn objects_fit_the_unit_cube() {
        for seed in 0..50 {
            for scene in [Scene::random_object(seed), Scene::chair(seed, true, false)] {
                for p in &scene.primitives {
                    let (lo, hi) = match p.shape {
                        Shape::Cuboid { min, max } => (min, max),
                        Shape::Cylinder { base, radius, height } => (
                            base - Vec3::new(radius, radius, 0.0),
                            base + Vec3::new(radius, radius, height),
                        ),
                        Shape::Sphere { center, radius } => (center - Vec3::splat(radius), center + Vec3::splat(radius)),
                        Shape::Ground { .. } => continue,
                    };
                    assert!(lo.x >= -0.5 && lo.y >= -0.5 && lo.z >= -0.5, "{lo:?}");
                    assert!(hi.x <= 0.5 && hi.y <= 0.5 && hi.z <= 0.5, "{hi:?}");
                    assert!(p.material.is_valid());
                }
            }
        }
    }

    #[test]
    fn box_hit_from_outside_and_inside() {
        let s = Shape::Cuboid {
            min: Vec3::splat(-1.0),
            max: Vec3::splat(1.0),
        };
        let ray = Ray {
            origin: Vec3::new(0.0, 0.0, 5.0),
            dir: -Vec3::Z,
        };
        let (t, n) = s.intersect(&ray, 1e-9, f64::INFINITY).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        assert_eq!(n, Vec3::Z);
        let inside = Ray {
            origin: Vec3::ZERO,
            dir: Vec3::X,
        };
        let (t, n) = s.intersect(&inside, 1e-9, f64::INFINITY).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert_eq!(n, Vec3::X);
    }

    #[test]
    fn cylinder_side_and_cap() {
        let s = Shape::Cylinder {
            base: Vec3::ZERO,
            radius: 0.5,
            height: 1.0,
        };
        let side = Ray {
            origin: Vec3::new(2.0, 0.0, 0.5),
            dir: -Vec3::X,
        };
        let (t, n) = s.intersect(&side, 1e-9, f64::INFINITY).unwrap();
        assert!((t - 1.5).abs() < 1e-12 && (n - Vec3::X).norm() < 1e-12);
        let cap = Ray {
            origin: Vec3::new(0.1, 0.1, 3.0),
            dir: -Vec3::Z,
        };
        let (t, n) = s.intersect(&cap, 1e-9, f64::INFINITY).unwrap();
        assert!((t - 2.0).abs() < 1e-12 && n == Vec3::Z);
    }
}
