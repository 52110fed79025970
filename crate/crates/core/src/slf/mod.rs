//! Light-field evaluation: single-light queries, environment-map
//! aggregation, sRGB handling and equidistributed sphere sampling.

mod color;
mod composite;
mod envmap;
mod frame;
mod sphere;

pub use color::{clamp_warnings, linear_to_srgb, srgb_to_linear};
pub use composite::{
    composite_env, composite_lights, env_lights, eval_cslf, normalize_exposure, predict_lights,
    CompositeConfig, CompositeMode, CompositeOutput,
};
pub use envmap::{env_from_equirect, EnvSample, EnvironmentMap};
pub use frame::{render_frame, SurfaceFrame};
pub use sphere::equidistributed_sphere_points;
