//! On-disk datasets.
//!
//! ```text
//! <root>/dataset.json
//! <root>/<object_id>/meta.json
//! <root>/<object_id>/cloud.f32
//! <root>/<object_id>/view_<i>/light_<j>.png
//! <root>/<object_id>/view_<i>/depth.dpth
//! <root>/<object_id>/view_<i>/mask.png
//! ```

use std::path::{Path, PathBuf};

use cslf_core::dataset::{DatasetPreset, ObjectData, View};
use cslf_core::nets::LightConfig;
use cslf_core::oracle::{CameraModel, SceneKind};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::files;
use crate::{Error, Result};

pub const DATASET_FILE: &str = "dataset.json";
pub const FORMAT_VERSION: u32 = 1;

/// Top-level index of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub preset_name: Option<String>,
    pub preset: DatasetPreset,
    pub seed: u64,
    pub objects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewMeta {
    pub camera: CameraModel,
    pub lights: Vec<LightConfig>,
    /// One image path per light, relative to the object directory.
    pub images: Vec<String>,
    pub depth: String,
    pub mask: String,
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectMeta {
    pub object_id: String,
    pub kind: SceneKind,
    pub seed: u64,
    pub cloud: String,
    pub cloud_points: usize,
    pub views: Vec<ViewMeta>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = files::read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    files::write_bytes(path, s.as_bytes())
}

/// Writes one object under `root/<object_id>`.
pub fn write_object(root: &Path, obj: &ObjectData) -> Result<ObjectMeta> {
    let id = obj.object_id();
    let dir = root.join(&id);
    files::write_cloud(&dir.join("cloud.f32"), &obj.cloud)?;
    let mut views = Vec::with_capacity(obj.views.len());
    for (i, v) in obj.views.iter().enumerate() {
        let vd = format!("view_{i}");
        let (w, h) = (v.width(), v.height());
        let mut images = Vec::with_capacity(v.images.len());
        for (j, img) in v.images.iter().enumerate() {
            let rel = format!("{vd}/light_{j}.png");
            files::write_rgb8(&dir.join(&rel), w, h, img)?;
            images.push(rel);
        }
        let depth = format!("{vd}/depth.dpth");
        files::write_depth(&dir.join(&depth), w, h, &v.depth)?;
        let mask = format!("{vd}/mask.png");
        files::write_mask(&dir.join(&mask), w, h, &v.mask)?;
        views.push(ViewMeta {
            camera: v.camera,
            lights: v.lights.clone(),
            images,
            depth,
            mask,
        });
    }
    let meta = ObjectMeta {
        object_id: id,
        kind: obj.kind,
        seed: obj.seed,
        cloud: String::from("cloud.f32"),
        cloud_points: obj.cloud.len(),
        views,
    };
    write_json(&dir.join("meta.json"), &meta)?;
    Ok(meta)
}

fn check_raster(path: &Path, got: (usize, usize), cam: &CameraModel) -> Result<()> {
    if got != (cam.width, cam.height) {
        return Err(Error::format(
            path,
            format!("raster is {}x{}, camera is {}x{}", got.0, got.1, cam.width, cam.height),
        ));
    }
    Ok(())
}

/// Reads the object stored in `dir`.
pub fn read_object(dir: &Path) -> Result<ObjectData> {
    let meta_path = dir.join("meta.json");
    let meta: ObjectMeta = read_json(&meta_path)?;
    let (kind, seed) = SceneKind::parse_object_id(&meta.object_id).map_err(|e| Error::format(&meta_path, e.to_string()))?;
    if (kind, seed) != (meta.kind, meta.seed) {
        return Err(Error::format(&meta_path, "object id disagrees with kind and seed"));
    }
    let cloud_path = dir.join(&meta.cloud);
    let cloud = files::read_cloud(&cloud_path)?;
    if cloud.len() != meta.cloud_points {
        return Err(Error::format(
            &cloud_path,
            format!("{} points, manifest lists {}", cloud.len(), meta.cloud_points),
        ));
    }
    let mut views = Vec::with_capacity(meta.views.len());
    for vm in &meta.views {
        if vm.images.len() != vm.lights.len() {
            return Err(Error::format(&meta_path, "image and light counts differ"));
        }
        let mut images = Vec::with_capacity(vm.images.len());
        for rel in &vm.images {
            let p = dir.join(rel);
            let (w, h, px) = files::read_rgb8(&p)?;
            check_raster(&p, (w, h), &vm.camera)?;
            images.push(px);
        }
        let dp = dir.join(&vm.depth);
        let (w, h, depth) = files::read_depth(&dp)?;
        check_raster(&dp, (w, h), &vm.camera)?;
        let mp = dir.join(&vm.mask);
        let (w, h, mask) = files::read_mask(&mp)?;
        check_raster(&mp, (w, h), &vm.camera)?;
        views.push(View {
            camera: vm.camera,
            lights: vm.lights.clone(),
            images,
            depth,
            mask,
        });
    }
    let obj = ObjectData {
        kind: meta.kind,
        seed: meta.seed,
        cloud,
        views,
    };
    obj.validate().map_err(|e| Error::format(&meta_path, e.to_string()))?;
    Ok(obj)
}

/// Generates and writes a whole dataset one object at a time.
pub fn generate_dataset(
    root: &Path,
    preset_name: Option<&str>,
    preset: &DatasetPreset,
    seed: u64,
    mut progress: impl FnMut(usize, &str),
) -> Result<DatasetManifest> {
    let mut objects = Vec::with_capacity(preset.objects);
    for i in 0..preset.objects {
        let obj = preset.generate_object(seed, i)?;
        let meta = write_object(root, &obj)?;
        progress(i, &meta.object_id);
        objects.push(meta.object_id);
    }
    let manifest = DatasetManifest {
        version: FORMAT_VERSION,
        preset_name: preset_name.map(String::from),
        preset: *preset,
        seed,
        objects,
    };
    write_json(&root.join(DATASET_FILE), &manifest)?;
    Ok(manifest)
}

/// Writes already generated objects with their manifest.
pub fn write_dataset(
    root: &Path,
    preset_name: Option<&str>,
    preset: &DatasetPreset,
    seed: u64,
    objects: &[ObjectData],
) -> Result<DatasetManifest> {
    let ids = objects
        .iter()
        .map(|o| write_object(root, o).map(|m| m.object_id))
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        version: FORMAT_VERSION,
        preset_name: preset_name.map(String::from),
        preset: *preset,
        seed,
        objects: ids,
    };
    write_json(&root.join(DATASET_FILE), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(root: &Path) -> Result<DatasetManifest> {
    let path = root.join(DATASET_FILE);
    let m: DatasetManifest = read_json(&path)?;
    if m.version != FORMAT_VERSION {
        return Err(Error::format(&path, format!("dataset version {} (expected {FORMAT_VERSION})", m.version)));
    }
    Ok(m)
}

pub fn read_dataset(root: &Path) -> Result<(DatasetManifest, Vec<ObjectData>)> {
    let m = read_manifest(root)?;
    let objects = m
        .objects
        .iter()
        .map(|id| read_object(&root.join(id)))
        .collect::<Result<Vec<_>>>()?;
    Ok((m, objects))
}

pub fn object_dir(root: &Path, object_id: &str) -> PathBuf {
    root.join(object_id)
}
