use cslf_core::nets::LightConfig;
use cslf_core::oracle::{
    render, sample_surface_points, sample_view_and_lights, shade, shadow_map, soft_shadow_visibility, CameraModel,
    Material, Primitive, Ray, Scene, SceneKind, ShadeSettings, ShadowSettings, Shape, ViewSampling,
};
use cslf_core::{rng, Vec3};
use proptest::prelude::*;
use rand::Rng;

fn unit_sphere() -> Scene {
    Scene::new(vec![Primitive {
        shape: Shape::Sphere {
            center: Vec3::ZERO,
            radius: 1.0,
        },
        material: Material::diffuse(Vec3::new(0.6, 0.5, 0.4)),
    }])
}

fn slab(min: Vec3, max: Vec3) -> Primitive {
    Primitive {
        shape: Shape::Cuboid { min, max },
        material: Material::diffuse(Vec3::splat(0.5)),
    }
}

#[test]
fn sampled_cameras_and_lights_sit_on_their_hemispheres() {
    let opts = ViewSampling::default();
    for seed in 0..200 {
        let (cam, lights) = sample_view_and_lights(seed, 5, &opts).unwrap();
        assert!((cam.center.norm() - 1.5).abs() < 1e-9);
        assert!(cam.center.z > 0.0);
        assert!(cam.rotation.orthonormality_error() < 1e-9);
        assert!(cam.fx > 0.0 && cam.fy > 0.0);
        for l in &lights {
            assert!((l.position.norm() - 10.0).abs() < 1e-9);
            assert!(l.position.z > 0.0);
            assert_eq!(l.color, Vec3::splat(1.0));
        }
        // the camera looks at the origin
        let (x, y) = cam.project(Vec3::ZERO).unwrap();
        assert!((x - cam.cx).abs() < 1e-9 && (y - cam.cy).abs() < 1e-9);
    }
    let colored = ViewSampling {
        colored_lights: true,
        ..opts
    };
    let (_, ls) = sample_view_and_lights(3, 20, &colored).unwrap();
    assert!(ls.iter().all(LightConfig::is_valid));
    assert!(ls.iter().any(|l| l.color != Vec3::splat(1.0)));
    assert_eq!(sample_view_and_lights(3, 20, &colored).unwrap().1, ls);
    assert!(sample_view_and_lights(3, 0, &opts).is_err());
}

#[test]
fn empty_scene_renders_background() {
    let cam = CameraModel::look_at(Vec3::new(0.0, 0.0, 1.5), Vec3::ZERO, 75.0, 16, 16).unwrap();
    let out = render(&Scene::empty(), &cam, &[LightConfig::white(Vec3::new(0.0, 0.0, 10.0))], &ShadeSettings::default(), 0);
    assert!(out.rgb.iter().all(|p| *p == [0, 0, 0]));
    assert_eq!(out.masked_count(), 0);
    assert!(out.depth.iter().all(|d| d.is_infinite()));
}

#[test]
fn center_pixel_depth_on_unit_sphere() {
    // odd size puts a pixel center exactly on the principal point
    let cam = CameraModel::look_at(Vec3::new(0.0, 0.0, 1.5), Vec3::ZERO, 75.0, 129, 129).unwrap();
    let out = render(&unit_sphere(), &cam, &[LightConfig::white(Vec3::new(0.0, 3.0, 10.0))], &ShadeSettings::default(), 0);
    let c = 64 * 129 + 64;
    assert!((f64::from(out.depth[c]) - 0.5).abs() < 1e-6);
    let (x, y) = CameraModel::pixel_center(64, 64);
    let p = cam.unproject(x, y, f64::from(out.depth[c])).unwrap();
    assert!((p.norm() - 1.0).abs() < 1e-6);
}

#[test]
fn unprojected_masked_pixels_lie_on_the_surface() {
    for kind in [SceneKind::Sphere, SceneKind::ShadowChair, SceneKind::Object] {
        let scene = Scene::from_kind(kind, 4);
        let (cam, lights) = sample_view_and_lights(11, 1, &ViewSampling { width: 48, height: 48, ..ViewSampling::default() }).unwrap();
        let out = render(&scene, &cam, &lights, &ShadeSettings::default(), 1);
        assert!(out.masked_count() > 0);
        for j in 0..48 {
            for i in 0..48 {
                let idx = j * 48 + i;
                if !out.mask[idx] {
                    continue;
                }
                let (x, y) = CameraModel::pixel_center(i, j);
                let p = cam.unproject(x, y, f64::from(out.depth[idx])).unwrap();
                assert!(scene.surface_distance(p) < 1e-5, "{kind:?} pixel ({i}, {j})");
            }
        }
    }
}

#[test]
fn rendering_is_deterministic() {
    let scene = Scene::from_kind(SceneKind::ShadowChair, 2);
    let (cam, lights) = sample_view_and_lights(5, 2, &ViewSampling { width: 32, height: 32, ..ViewSampling::default() }).unwrap();
    let a = render(&scene, &cam, &lights, &ShadeSettings::default(), 9);
    assert_eq!(a, render(&scene, &cam, &lights, &ShadeSettings::default(), 9));
}

#[test]
fn surface_points_lie_on_primitives() {
    let scene = Scene::from_kind(SceneKind::Object, 7);
    let pts = sample_surface_points(&scene, 2048, 3).unwrap();
    assert_eq!(pts.len(), 2048);
    for p in &pts {
        assert!(scene.surface_distance(*p) < 1e-9);
    }
    assert_eq!(pts, sample_surface_points(&scene, 2048, 3).unwrap());
    assert!(sample_surface_points(&Scene::empty(), 10, 0).is_err());
    let ground_only = Scene::new(vec![Primitive {
        shape: Shape::Ground { height: 0.0 },
        material: Material::diffuse(Vec3::splat(0.5)),
    }]);
    assert!(sample_surface_points(&ground_only, 10, 0).is_err());
}

#[test]
fn sphere_points_average_to_the_center() {
    let pts = sample_surface_points(&unit_sphere(), 20_000, 5).unwrap();
    let n = pts.len() as f64;
    let mean = pts.iter().fold(Vec3::ZERO, |a, p| a + *p) / n;
    // each coordinate of a uniform unit-sphere point has variance 1/3
    let sigma = (1.0 / (3.0 * n)).sqrt();
    for c in mean.to_array() {
        assert!(c.abs() < 3.0 * sigma, "{c} vs {sigma}");
    }
}

#[test]
fn soft_shadow_cases() {
    let light = LightConfig::white(Vec3::new(0.0, 0.0, 10.0));
    assert_eq!(soft_shadow_visibility(&Scene::empty(), Vec3::ZERO, &light, 0.3, 16, 0), 1.0);
    let blocker = Scene::new(vec![slab(Vec3::new(-5.0, -5.0, 4.0), Vec3::new(5.0, 5.0, 5.0))]);
    assert_eq!(soft_shadow_visibility(&blocker, Vec3::ZERO, &light, 0.3, 16, 0), 0.0);
    assert_eq!(soft_shadow_visibility(&blocker, Vec3::ZERO, &light, 0.0, 1, 0), 0.0);
    // half plane x < 0 halfway to the light hides half of the disk
    let half = Scene::new(vec![slab(Vec3::new(-100.0, -100.0, 4.9), Vec3::new(0.0, 100.0, 5.1))]);
    let f = soft_shadow_visibility(&half, Vec3::ZERO, &light, 0.3, 256, 3);
    assert!((f - 0.5).abs() < 0.1, "{f}");
}

fn hit_on(scene: &Scene, from: Vec3) -> cslf_core::oracle::SurfaceHit {
    let ray = Ray {
        origin: from,
        dir: (-from).normalized(),
    };
    scene.intersect(&ray, 0.0, f64::INFINITY).unwrap()
}

#[test]
fn shadow_map_matches_rendered_visibility() {
    let scene = Scene::from_kind(SceneKind::ShadowChair, 1);
    let (cam, lights) = sample_view_and_lights(2, 1, &ViewSampling { width: 40, height: 40, ..ViewSampling::default() }).unwrap();
    let settings = ShadeSettings::default();
    let map = shadow_map(&scene, &cam, &lights[0], &settings, 5);
    let out = render(&scene, &cam, &lights, &settings, 5);
    for (probe, m) in map.iter().zip(&out.mask) {
        assert_eq!(probe.is_some(), *m);
        if let Some(p) = probe {
            assert!((0.0..=1.0).contains(&p.visibility));
            assert!(scene.is_object(p.primitive));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shading_is_linear_in_light_color(
        seed in any::<u64>(),
        k in 1i32..4,
        c in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
    ) {
        let scene = Scene::from_kind(SceneKind::ShadowChair, seed % 7);
        let mut r = rng::seeded(seed);
        let from = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(0.2..1.0)).normalized() * 1.5;
        let hit = hit_on(&scene, from);
        let v = (from - hit.point).normalized();
        let pos = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(0.1..1.0)).normalized() * 10.0;
        let color = Vec3::new(c.0, c.1, c.2);
        let lam = 0.5f64.powi(k);
        let light = |col: Vec3| [LightConfig { position: pos, color: col }];
        let no_amb = ShadeSettings { ambient: 0.0, ..ShadeSettings::default() };
        // power-of-two scaling commutes with rounding, so this is bitwise
        let a = shade(&scene, &hit, v, &light(color * lam), &no_amb, seed);
        let b = shade(&scene, &hit, v, &light(color), &no_amb, seed) * lam;
        prop_assert_eq!(a, b);
        let s = ShadeSettings::default();
        let amb = hit.material.albedo * s.ambient;
        let mu = r.random_range(0.0..1.0);
        let a = shade(&scene, &hit, v, &light(color * mu), &s, seed) - amb;
        let b = (shade(&scene, &hit, v, &light(color), &s, seed) - amb) * mu;
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn occluders_never_brighten(seed in any::<u64>(), h in 0.6f64..3.0, w in 0.05f64..1.0) {
        let base = Scene::from_kind(SceneKind::ShadowChair, seed % 5);
        let mut r = rng::seeded(seed);
        let from = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(0.2..1.0)).normalized() * 1.5;
        let hit = hit_on(&base, from);
        let v = (from - hit.point).normalized();
        let lights = [LightConfig::white(Vec3::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0), 8.0))];
        let mut prims = base.primitives.clone();
        let c = Vec3::new(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5), h);
        prims.push(slab(c - Vec3::splat(w), c + Vec3::splat(w)));
        let occluded = Scene::new(prims);
        for settings in [ShadeSettings::default(), ShadeSettings { shadows: ShadowSettings::HARD, ..ShadeSettings::default() }] {
            let a = shade(&base, &hit, v, &lights, &settings, seed);
            let b = shade(&occluded, &hit, v, &lights, &settings, seed);
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                prop_assert!(y <= *x);
            }
        }
    }

    #[test]
    fn project_unproject_round_trip(seed in any::<u64>()) {
        let (cam, _) = sample_view_and_lights(seed, 1, &ViewSampling::default()).unwrap();
        let mut r = rng::seeded(seed);
        for _ in 0..50 {
            let (x, y) = (r.random_range(0.0..128.0), r.random_range(0.0..128.0));
            let t = r.random_range(0.1..5.0);
            let p = cam.unproject(x, y, t).unwrap();
            let (u, w) = cam.project(p).unwrap();
            prop_assert!((u - x).abs() < 1e-9 && (w - y).abs() < 1e-9);
            prop_assert!(((p - cam.center).norm() - t).abs() < 1e-12);
        }
    }
}
