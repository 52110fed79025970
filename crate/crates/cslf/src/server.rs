//! HTTP render service.
//!
//! * `GET /models`: served checkpoints.
//! * `POST /render`: PNG of one object under point lights or an environment
//!   map; the `X-Render-Millis` header carries the render time.
//! * `POST /sample-latent`: a prior draw of the image code.
//!
//! Invalid bodies get 422 with the offending field, unknown models, objects
//! or environment maps 404, and requests beyond the admission bound 503.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cslf_core::image::RgbImage;
use cslf_core::nets::LightConfig;
use cslf_core::slf::{env_from_equirect, CompositeMode};
use cslf_core::Vec3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tower_http::cors::{Any, CorsLayer};

use crate::checkpoint::Checkpoint;
use crate::render::{self, Latent, Lighting, RenderJob};
use crate::{files, Error, Result};

/// Largest accepted image side.
pub const MAX_SIDE: usize = 2048;
/// Largest accepted environment sample count.
pub const MAX_ENV_SAMPLES: usize = 4096;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub queue: usize,
    pub workers: usize,
    pub cors_origin: Option<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            queue: 16,
            workers: 2,
            cors_origin: None,
        }
    }
}

struct Inner {
    models: BTreeMap<String, Arc<Checkpoint>>,
    envmaps: BTreeMap<String, Arc<RgbImage>>,
    admission: Arc<Semaphore>,
    workers: Arc<Semaphore>,
    cors_origin: Option<String>,
}

/// Frozen model registry plus the admission and worker bounds.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(
        models: Vec<(String, Checkpoint)>,
        envmaps: Vec<(String, RgbImage)>,
        cfg: ServerConfig,
    ) -> Result<Self> {
        if cfg.workers == 0 {
            return Err(Error::Usage(String::from("at least one render worker is required")));
        }
        let mut m = BTreeMap::new();
        for (id, c) in models {
            if m.insert(id.clone(), Arc::new(c)).is_some() {
                return Err(Error::Usage(format!("model id `{id}` is used twice")));
            }
        }
        let mut e = BTreeMap::new();
        for (id, img) in envmaps {
            if e.insert(id.clone(), Arc::new(img)).is_some() {
                return Err(Error::Usage(format!("environment map id `{id}` is used twice")));
            }
        }
        Ok(AppState(Arc::new(Inner {
            models: m,
            envmaps: e,
            admission: Arc::new(Semaphore::new(cfg.queue)),
            workers: Arc::new(Semaphore::new(cfg.workers)),
            cors_origin: cfg.cors_origin,
        })))
    }

    /// Permits for admitted renders; holding them all makes the queue full.
    pub fn admission(&self) -> Arc<Semaphore> {
        self.0.admission.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub kind: cslf_core::nets::ModelKind,
    pub conditioning: cslf_core::nets::Conditioning,
    pub vae: bool,
    pub light_conditioned: bool,
    /// Resolution of the training images, `[width, height]`.
    pub resolution: [usize; 2],
    /// Dimension of the image code, when the model has one.
    pub latent_dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSpec {
    pub position: [f64; 3],
    #[serde(default = "white")]
    pub color: [f64; 3],
}

fn white() -> [f64; 3] {
    [1.0; 3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Eq4,
    Exposure,
}

impl From<ModeName> for CompositeMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Eq4 => CompositeMode::Eq4Mean,
            ModeName::Exposure => CompositeMode::ExposureNormalized,
        }
    }
}

/// Either `lights` or `envmap_id` (with `samples`).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightingSpec {
    pub lights: Option<Vec<LightSpec>>,
    pub envmap_id: Option<String>,
    pub samples: Option<usize>,
    pub mode: Option<ModeName>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    pub model_id: String,
    pub object_id: String,
    pub camera: CameraSpec,
    pub lighting: LightingSpec,
    pub latent: Option<Latent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleLatentRequest {
    pub model_id: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLatentResponse {
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    /// Offending request field, for invalid bodies.
    pub field: Option<String>,
}

#[derive(Debug)]
pub struct Reject {
    status: StatusCode,
    body: ApiError,
}

impl Reject {
    fn new(status: StatusCode, field: Option<&str>, error: impl Into<String>) -> Self {
        Reject {
            status,
            body: ApiError {
                error: error.into(),
                field: field.map(String::from),
            },
        }
    }

    fn invalid(field: &str, error: impl Into<String>) -> Self {
        Reject::new(StatusCode::UNPROCESSABLE_ENTITY, Some(field), error)
    }

    fn not_found(field: &str, error: impl Into<String>) -> Self {
        Reject::new(StatusCode::NOT_FOUND, Some(field), error)
    }
}

impl IntoResponse for Reject {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> std::result::Result<T, Reject> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Reject::new(StatusCode::UNPROCESSABLE_ENTITY, None, format!("malformed JSON: {inner}"))
        } else {
            let field = if path == "." { None } else { Some(path.as_str()) };
            let msg = match field {
                Some(f) => format!("{f}: {inner}"),
                None => inner.to_string(),
            };
            Reject::new(StatusCode::UNPROCESSABLE_ENTITY, field, msg)
        }
    })
}

fn model(state: &AppState, id: &str) -> std::result::Result<Arc<Checkpoint>, Reject> {
    state
        .0
        .models
        .get(id)
        .cloned()
        .ok_or_else(|| Reject::not_found("model_id", format!("unknown model `{id}`")))
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

/// Turns a request into a render job, rejecting invalid fields by name.
pub fn build_job(state: &AppState, req: &RenderRequest) -> std::result::Result<(Arc<Checkpoint>, RenderJob), Reject> {
    let ckpt = model(state, &req.model_id)?;
    render::parse_object(&req.object_id).map_err(|_| Reject::not_found("object_id", format!("unknown object `{}`", req.object_id)))?;
    let c = &req.camera;
    for (name, v) in [("camera.width", c.width), ("camera.height", c.height)] {
        if v == 0 || v > MAX_SIDE {
            return Err(Reject::invalid(name, format!("{name} must lie in 1..={MAX_SIDE}")));
        }
    }
    if !(c.fov_deg > 0.0 && c.fov_deg < 180.0) {
        return Err(Reject::invalid("camera.fov_deg", "camera.fov_deg must lie in (0, 180)"));
    }
    if c.position.iter().chain(&c.look_at).any(|v| !v.is_finite()) {
        return Err(Reject::invalid("camera.position", "camera coordinates must be finite"));
    }
    let camera = render::camera_look_at(vec3(c.position), vec3(c.look_at), c.fov_deg, c.width, c.height)
        .map_err(|e| Reject::invalid("camera.position", format!("camera.position: {e}")))?;
    let l = &req.lighting;
    let lighting = match (&l.lights, &l.envmap_id) {
        (Some(_), Some(_)) => {
            return Err(Reject::invalid("lighting", "lighting: give either lights or envmap_id, not both"))
        }
        (None, None) => return Err(Reject::invalid("lighting", "lighting: lights or envmap_id is required")),
        (Some(specs), None) => {
            if specs.is_empty() {
                return Err(Reject::invalid("lighting.lights", "lighting.lights: at least one light is required"));
            }
            if l.samples.is_some() {
                return Err(Reject::invalid("lighting.samples", "lighting.samples only applies to environment maps"));
            }
            let mut lights = Vec::with_capacity(specs.len());
            for (i, s) in specs.iter().enumerate() {
                let light = LightConfig {
                    position: vec3(s.position),
                    color: vec3(s.color),
                };
                if !light.position.is_finite() {
                    let f = format!("lighting.lights[{i}].position");
                    return Err(Reject::invalid(&f, format!("{f} must be finite")));
                }
                if !light.is_valid() {
                    let f = format!("lighting.lights[{i}].color");
                    return Err(Reject::invalid(&f, format!("{f} must lie in [0, 1]")));
                }
                lights.push(light);
            }
            Lighting::Lights {
                lights,
                mode: l.mode.map(CompositeMode::from),
            }
        }
        (None, Some(id)) => {
            let img = state
                .0
                .envmaps
                .get(id)
                .ok_or_else(|| Reject::not_found("lighting.envmap_id", format!("unknown environment map `{id}`")))?;
            let samples = l.samples.unwrap_or(64);
            if samples == 0 || samples > MAX_ENV_SAMPLES {
                return Err(Reject::invalid(
                    "lighting.samples",
                    format!("lighting.samples must lie in 1..={MAX_ENV_SAMPLES}"),
                ));
            }
            let map = env_from_equirect(img, samples).map_err(|e| Reject::invalid("lighting.envmap_id", e.to_string()))?;
            Lighting::Env {
                map,
                mode: l.mode.unwrap_or(ModeName::Exposure).into(),
            }
        }
    };
    let arch = ckpt.model.arch();
    if let Some(lat) = &req.latent {
        if !arch.conditioning.uses_image() {
            return Err(Reject::invalid("latent", "latent: model has no image code"));
        }
        lat.resolve(arch.image_dim).map_err(|e| Reject::invalid("latent", format!("latent: {e}")))?;
    }
    Ok((
        ckpt,
        RenderJob {
            camera,
            lighting,
            object_id: req.object_id.clone(),
            latent: req.latent.clone(),
        },
    ))
}

async fn list_models(State(state): State<AppState>) -> Json<Vec<ModelInfo>> {
    Json(
        state
            .0
            .models
            .iter()
            .map(|(id, c)| {
                let a = c.model.arch();
                let res = c
                    .header
                    .dataset
                    .map(|d| [d.sampling.width, d.sampling.height])
                    .unwrap_or([128, 128]);
                ModelInfo {
                    model_id: id.clone(),
                    kind: a.kind,
                    conditioning: a.conditioning,
                    vae: a.vae,
                    light_conditioned: a.light_conditioned,
                    resolution: res,
                    latent_dim: a.conditioning.uses_image().then_some(a.image_dim),
                }
            })
            .collect(),
    )
}

async fn render_handler(State(state): State<AppState>, body: Bytes) -> Response {
    let req: RenderRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(r) => return r.into_response(),
    };
    let (ckpt, job) = match build_job(&state, &req) {
        Ok(j) => j,
        Err(r) => return r.into_response(),
    };
    let Ok(_admitted) = state.0.admission.clone().try_acquire_owned() else {
        return Reject::new(StatusCode::SERVICE_UNAVAILABLE, None, "render queue is full").into_response();
    };
    let Ok(_worker) = state.0.workers.clone().acquire_owned().await else {
        return Reject::new(StatusCode::SERVICE_UNAVAILABLE, None, "server is shutting down").into_response();
    };
    let t0 = Instant::now();
    let out = tokio::task::spawn_blocking(move || render::render(&ckpt, &job).and_then(|img| files::encode_png(&img))).await;
    let ms = t0.elapsed().as_millis();
    match out {
        Ok(Ok(png)) => {
            let mut resp = ([(header::CONTENT_TYPE, "image/png")], png).into_response();
            resp.headers_mut()
                .insert("x-render-millis", HeaderValue::from_str(&ms.to_string()).expect("digits are a valid header"));
            resp
        }
        Ok(Err(e @ (Error::Usage(_) | Error::Core(_)))) if e.exit_code() == 1 => {
            Reject::new(StatusCode::UNPROCESSABLE_ENTITY, None, e.to_string()).into_response()
        }
        Ok(Err(e)) => Reject::new(StatusCode::INTERNAL_SERVER_ERROR, None, e.to_string()).into_response(),
        Err(e) => Reject::new(StatusCode::INTERNAL_SERVER_ERROR, None, format!("render task failed: {e}")).into_response(),
    }
}

async fn sample_latent(State(state): State<AppState>, body: Bytes) -> Response {
    let req: SampleLatentRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(r) => return r.into_response(),
    };
    let ckpt = match model(&state, &req.model_id) {
        Ok(c) => c,
        Err(r) => return r.into_response(),
    };
    let a = ckpt.model.arch();
    if !a.conditioning.uses_image() {
        return Reject::invalid("model_id", "model_id: model has no image code").into_response();
    }
    Json(SampleLatentResponse {
        z: render::sample_latent(req.seed, a.image_dim),
    })
    .into_response()
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_methods(Any)
        .allow_headers(Any)
        .expose_headers([header::HeaderName::from_static("x-render-millis")]);
    let cors = match state.0.cors_origin.as_deref().and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(o) => cors.allow_origin(o),
        None => cors.allow_origin(Any),
    };
    Router::new()
        .route("/models", get(list_models))
        .route("/render", post(render_handler))
        .route("/sample-latent", post(sample_latent))
        .layer(cors)
        .with_state(state)
}

pub async fn serve(addr: &str, state: AppState) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Usage(format!("cannot bind {addr}: {e}")))?;
    log::info!("listening on {addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Internal(e.to_string()))
}
