use alloc::format;

use serde::{Deserialize, Serialize};

use crate::geom::Mat3;
use crate::{math, Error, Result, Vec3};

/// Vertical field of view used for generated data.
pub const DEFAULT_FOV_DEG: f64 = 75.0;

/// Pinhole camera. The camera frame has `+x` right, `+y` up and looks down
/// `-z`; image rows grow downward. A pixel `(i, j)` covers
/// `[i, i+1) x [j, j+1)` in continuous image coordinates, so its center is at
/// `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Camera-to-world rotation; columns are the camera axes in world space.
    pub rotation: Mat3,
    pub center: Vec3,
}

impl CameraModel {
    /// Camera at `center` looking at `target` with `+z` as the up hint.
    pub fn look_at(center: Vec3, target: Vec3, fov_deg: f64, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::InvalidInput(format!(
                "camera {width}x{height} with fov {fov_deg}"
            )));
        }
        let forward = target - center;
        if !(forward.norm() > 0.0) || !center.is_finite() || !target.is_finite() {
            return Err(Error::InvalidInput(format!("camera at {center:?} cannot look at {target:?}")));
        }
        let forward = forward.normalized();
        let mut right = forward.cross(Vec3::Z);
        if right.norm() < 1e-9 {
            right = forward.cross(Vec3::Y);
        }
        let right = right.normalized();
        let up = right.cross(forward).normalized();
        let rotation = Mat3::from_columns(right, up, -forward);
        let f = (height as f64 / 2.0) / math::tan(fov_deg.to_radians() / 2.0);
        Ok(CameraModel {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
            rotation,
            center,
        })
    }

    pub fn pixel_center(i: usize, j: usize) -> (f64, f64) {
        (i as f64 + 0.5, j as f64 + 0.5)
    }

    /// World-space unit direction of the ray through image point `(x, y)`.
    pub fn ray_direction(&self, x: f64, y: f64) -> Vec3 {
        let d = Vec3::new((x - self.cx) / self.fx, -(y - self.cy) / self.fy, -1.0);
        self.rotation.mul_vec(d).normalized()
    }

    /// Point at ray depth `t` (distance from the camera center) along the ray
    /// through `(x, y)`.
    pub fn unproject(&self, x: f64, y: f64, t: f64) -> Result<Vec3> {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::InvalidInput(format!("depth {t} is not a finite positive ray depth")));
        }
        if !(x >= 0.0 && y >= 0.0 && x <= self.width as f64 && y <= self.height as f64) {
            return Err(Error::InvalidInput(format!("image point ({x}, {y}) out of bounds")));
        }
        Ok(self.center + self.ray_direction(x, y) * t)
    }

    /// Image coordinates of a world point in front of the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        let d = self.rotation.transpose().mul_vec(p - self.center);
        if d.z >= 0.0 {
            return None;
        }
        let x = self.cx + self.fx * d.x / -d.z;
        let y = self.cy - self.fy * d.y / -d.z;
        Some((x, y))
    }
}
