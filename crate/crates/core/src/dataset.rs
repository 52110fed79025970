//! In-memory datasets: rendered views of oracle scenes, pixel sampling and
//! training batches.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::image::{resize_box, RgbImage};
use crate::nets::LightConfig;
use crate::oracle::{
    render, sample_surface_points, sample_view_and_lights, CameraModel, Scene, SceneKind, ShadeSettings,
    ShadowSettings, ViewSampling,
};
use crate::rng;
use crate::{Error, Result, Vec3};

/// One supervised example: a surface point, the unit direction toward the
/// camera and the observed sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSample {
    pub p: Vec3,
    pub v: Vec3,
    pub target: [f64; 3],
}

/// One camera with its depth, mask and one 8-bit sRGB image per light.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub camera: CameraModel,
    pub lights: Vec<LightConfig>,
    pub images: Vec<Vec<[u8; 3]>>,
    pub depth: Vec<f32>,
    pub mask: Vec<bool>,
}

impl View {
    pub fn width(&self) -> usize {
        self.camera.width
    }

    pub fn height(&self) -> usize {
        self.camera.height
    }

    pub fn masked_pixels(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn image(&self, light: usize) -> RgbImage {
        RgbImage::from_srgb8(self.width(), self.height(), &self.images[light]).expect("view rasters match the camera")
    }

    /// Surface point and view direction of pixel `idx`.
    pub fn surface_sample(&self, idx: usize) -> Result<(Vec3, Vec3)> {
        let (i, j) = (idx % self.width(), idx / self.width());
        if !self.mask[idx] {
            return Err(Error::InvalidInput(format!("pixel ({i}, {j}) is outside the object mask")));
        }
        let (x, y) = CameraModel::pixel_center(i, j);
        let p = self.camera.unproject(x, y, f64::from(self.depth[idx]))?;
        Ok((p, (self.camera.center - p).normalized()))
    }

    /// Points and view directions of every masked pixel, in raster order.
    pub fn surface(&self) -> Result<(Vec<usize>, Vec<Vec3>, Vec<Vec3>)> {
        let idx = self.masked_pixels();
        let mut points = Vec::with_capacity(idx.len());
        let mut dirs = Vec::with_capacity(idx.len());
        for &i in &idx {
            let (p, v) = self.surface_sample(i)?;
            points.push(p);
            dirs.push(v);
        }
        Ok((idx, points, dirs))
    }

    fn check(&self) -> Result<()> {
        let n = self.width() * self.height();
        let ok = self.depth.len() == n
            && self.mask.len() == n
            && !self.lights.is_empty()
            && self.images.len() == self.lights.len()
            && self.images.iter().all(|im| im.len() == n);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "view rasters do not match a {}x{} camera with {} lights",
                self.width(),
                self.height(),
                self.lights.len()
            )))
        }
    }
}

/// Uniformly samples `n` distinct masked pixels of `view` under light `light`.
pub fn sample_training_pixels(view: &View, light: usize, n: usize, seed: u64) -> Result<Vec<SceneSample>> {
    if light >= view.images.len() {
        return Err(Error::InvalidInput(format!("light {light} of {}", view.images.len())));
    }
    let masked = view.masked_pixels();
    if masked.len() < n {
        return Err(Error::InvalidInput(format!(
            "view has {} masked pixels, {n} requested",
            masked.len()
        )));
    }
    let mut r = rng::seeded(seed);
    let image = &view.images[light];
    index::sample(&mut r, masked.len(), n)
        .into_iter()
        .map(|k| {
            let idx = masked[k];
            let (p, v) = view.surface_sample(idx)?;
            Ok(SceneSample {
                p,
                v,
                target: image[idx].map(|c| f64::from(c) / 255.0),
            })
        })
        .collect()
}

/// All rendered data of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectData {
    pub kind: SceneKind,
    pub seed: u64,
    /// Surface point cloud for the geometry encoder.
    pub cloud: Vec<Vec3>,
    pub views: Vec<View>,
}

impl ObjectData {
    pub fn object_id(&self) -> String {
        self.kind.object_id(self.seed)
    }

    pub fn scene(&self) -> Scene {
        Scene::from_kind(self.kind, self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(Error::Empty("object views"));
        }
        self.views.iter().try_for_each(View::check)
    }
}

/// Generation recipe for one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetPreset {
    pub kind: SceneKind,
    pub objects: usize,
    pub views: usize,
    pub lights: usize,
    pub sampling: ViewSampling,
    pub shading: ShadeSettings,
    pub cloud_points: usize,
    /// Default pixels sampled per target view during training.
    pub pixels_per_view: usize,
}

impl DatasetPreset {
    /// A single chair seen from 50 views under 30 lights each.
    pub fn single_object() -> Self {
        DatasetPreset {
            kind: SceneKind::Chair,
            objects: 1,
            views: 50,
            lights: 30,
            sampling: ViewSampling::default(),
            shading: ShadeSettings::default(),
            cloud_points: 2048,
            pixels_per_view: 2048,
        }
    }

    /// Many procedural objects, 10 views with 4 lights each.
    pub fn single_view() -> Self {
        DatasetPreset {
            kind: SceneKind::Object,
            objects: 64,
            views: 10,
            lights: 4,
            pixels_per_view: 500,
            ..DatasetPreset::single_object()
        }
    }

    /// Chair with armrests standing on a ground plane.
    pub fn shadow() -> Self {
        DatasetPreset {
            kind: SceneKind::ShadowChair,
            views: 20,
            lights: 8,
            ..DatasetPreset::single_object()
        }
    }

    /// Glossy sphere under colored lights.
    pub fn reflection() -> Self {
        DatasetPreset {
            kind: SceneKind::SpecularSphere,
            views: 20,
            lights: 8,
            sampling: ViewSampling {
                colored_lights: true,
                ..ViewSampling::default()
            },
            shading: ShadeSettings {
                shadows: ShadowSettings::HARD,
                ..ShadeSettings::default()
            },
            ..DatasetPreset::single_object()
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "single-object" => DatasetPreset::single_object(),
            "single-view" => DatasetPreset::single_view(),
            "shadow" => DatasetPreset::shadow(),
            "reflection" => DatasetPreset::reflection(),
            _ => return None,
        })
    }

    pub const NAMES: [&'static str; 4] = ["single-object", "single-view", "shadow", "reflection"];

    /// Scene seed of the `i`-th object under a global seed.
    pub fn object_seed(&self, seed: u64, i: usize) -> u64 {
        if self.objects == 1 && self.kind != SceneKind::Object {
            seed
        } else {
            rng::derive_seed(seed, 0x0b_0000 + i as u64)
        }
    }

    /// Renders object `i`. Views are seeded from the object seed, so any
    /// object can be regenerated on its own.
    pub fn generate_object(&self, seed: u64, i: usize) -> Result<ObjectData> {
        self.render_object(self.object_seed(seed, i))
    }

    /// Geometry-encoder point cloud of an object.
    pub fn object_cloud(&self, object_seed: u64) -> Result<Vec<Vec3>> {
        object_cloud(self.kind, object_seed, self.cloud_points)
    }

    /// Renders view `i` of an object under its sampled lights.
    pub fn render_view(&self, scene: &Scene, object_seed: u64, i: usize) -> Result<View> {
        if self.lights == 0 {
            return Err(Error::InvalidInput(String::from("preset needs at least one light")));
        }
        let (camera, lights) = sample_view_and_lights(view_seed(object_seed, i), self.lights, &self.sampling)?;
        let mut images = Vec::with_capacity(lights.len());
        let mut depth = Vec::new();
        let mut mask = Vec::new();
        for (j, light) in lights.iter().enumerate() {
            let out = render(scene, &camera, core::slice::from_ref(light), &self.shading, shadow_seed(object_seed, i, j));
            if j == 0 {
                depth = out.depth;
                mask = out.mask;
            }
            images.push(out.rgb);
        }
        Ok(View {
            camera,
            lights,
            images,
            depth,
            mask,
        })
    }

    pub fn render_object(&self, object_seed: u64) -> Result<ObjectData> {
        if self.views == 0 {
            return Err(Error::InvalidInput(String::from("preset needs at least one view")));
        }
        let scene = Scene::from_kind(self.kind, object_seed);
        let views = (0..self.views)
            .map(|i| self.render_view(&scene, object_seed, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(ObjectData {
            kind: self.kind,
            seed: object_seed,
            cloud: self.object_cloud(object_seed)?,
            views,
        })
    }

    pub fn generate(&self, seed: u64) -> Result<Vec<ObjectData>> {
        (0..self.objects).map(|i| self.generate_object(seed, i)).collect()
    }
}

/// Camera and light sampling seed of view `view`.
pub fn view_seed(object_seed: u64, view: usize) -> u64 {
    rng::derive_seed(object_seed, 0x7_0000 + view as u64)
}

/// Soft-shadow seed of the render of view `view` under its light `light`.
pub fn shadow_seed(object_seed: u64, view: usize, light: usize) -> u64 {
    rng::derive_seed(view_seed(object_seed, view), light as u64)
}

/// Surface cloud of an object. Clouds of different sizes share their
/// prefix, so a model may use the first `n` points of a stored cloud.
/// Coordinates are rounded to `f32`, the precision of the cloud file.
pub fn object_cloud(kind: SceneKind, object_seed: u64, n: usize) -> Result<Vec<Vec3>> {
    let scene = Scene::from_kind(kind, object_seed);
    let pts = sample_surface_points(&scene, n, rng::derive_seed(object_seed, 0xc10d))?;
    let f = |c: f64| f64::from(c as f32);
    Ok(pts.into_iter().map(|p| Vec3::new(f(p.x), f(p.y), f(p.z))).collect())
}

/// One batch element: a target view supervised under one of its lights and
/// an input view whose image feeds the image encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub object: usize,
    pub input_view: usize,
    pub input_light: usize,
    pub target_view: usize,
    pub target_light: usize,
    pub light: LightConfig,
    pub samples: Vec<SceneSample>,
}

/// Draws `batch_size` elements: a random object, a random input view under a
/// random light, and `n_pixels` pixels of a random target view under one
/// random light of that view.
pub fn sample_batch(objects: &[ObjectData], batch_size: usize, n_pixels: usize, seed: u64) -> Result<Vec<BatchItem>> {
    if objects.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if batch_size == 0 || n_pixels == 0 {
        return Err(Error::Empty("batch"));
    }
    let mut r = rng::seeded(seed);
    (0..batch_size)
        .map(|_| {
            let object = r.random_range(0..objects.len());
            let obj = &objects[object];
            let input_view = r.random_range(0..obj.views.len());
            let input_light = r.random_range(0..obj.views[input_view].lights.len());
            let target_view = r.random_range(0..obj.views.len());
            let view = &obj.views[target_view];
            let target_light = r.random_range(0..view.lights.len());
            let samples = sample_training_pixels(view, target_light, n_pixels, r.random())?;
            Ok(BatchItem {
                object,
                input_view,
                input_light,
                target_view,
                target_light,
                light: view.lights[target_light],
                samples,
            })
        })
        .collect()
}

/// Image-encoder input for one view and light, box-filtered to `size x size`.
pub fn encoder_image(view: &View, light: usize, size: usize) -> Result<RgbImage> {
    resize_box(&view.image(light), size, size)
}

/// Restricts every object to its first `views` views and first `lights`
/// lights per view.
pub fn limit_views(objects: &mut [ObjectData], views: usize, lights: usize) {
    for o in objects {
        o.views.truncate(views.max(1));
        for v in &mut o.views {
            v.lights.truncate(lights.max(1));
            v.images.truncate(lights.max(1));
        }
    }
}
