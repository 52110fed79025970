//! Ground-truth generator: procedural scenes, hemisphere camera and light
//! sampling, and a Blinn-Phong ray tracer with hard or soft shadow rays.

mod camera;
mod render;
mod sampling;
mod scene;
mod shade;

pub use camera::{CameraModel, DEFAULT_FOV_DEG};
pub use render::{render, shadow_map, RenderOutput, ShadowProbe};
pub use sampling::{sample_surface_points, sample_view_and_lights, uniform_hemisphere, ViewSampling};
pub use scene::{Material, Primitive, Ray, Scene, SceneKind, Shape, SurfaceHit};
pub use shade::{shade, soft_shadow_visibility, ShadeSettings, ShadowSettings};
