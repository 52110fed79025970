//! Command line interface. Defaults marked `[PAPER]` are the values the
//! method's authors report; the rest are choices of this implementation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cslf_core::dataset::{encoder_image, limit_views, DatasetPreset};
use cslf_core::metrics::{error_map, MetricRow};
use cslf_core::nets::{Conditioning, ModelKind};
use cslf_core::slf::{env_from_equirect, render_frame, CompositeMode, SurfaceFrame};
use cslf_core::train::Trainer;
use cslf_core::Vec3;
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::FlatConfig;
use crate::manifest::{manifest_path, RunManifest};
use crate::render::{self, Latent, Lighting, RenderJob};
use crate::store::{self, write_json};
use crate::{files, server, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "cslf", version, about = "Conditional implicit surface light fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a dataset from a preset with the analytic ray tracer.
    GenData(GenDataArgs),
    /// Train a model on a generated dataset and write a `.cslf` checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint against dataset views; writes JSON metric rows.
    Eval(EvalArgs),
    /// Render a turntable of an object.
    Render(RenderArgs),
    /// Render an object under explicit point lights.
    Relight(RelightArgs),
    /// Render an object under an equirectangular environment map.
    EnvRender(EnvRenderArgs),
    /// Serve checkpoints over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Preset {
    SingleObject,
    SingleView,
    Shadow,
    Reflection,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::SingleObject => "single-object",
            Preset::SingleView => "single-view",
            Preset::Shadow => "shadow",
            Preset::Reflection => "reflection",
        }
    }

    pub fn preset(self) -> DatasetPreset {
        DatasetPreset::by_name(self.name()).expect("every preset name is registered")
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenDataArgs {
    /// single-object: 1 chair, 50 views x 30 lights [PAPER]; single-view: 64
    /// objects, 10 views x 4 lights [PAPER]; shadow: chair with armrests on a
    /// ground plane; reflection: glossy sphere.
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub views: Option<usize>,
    #[arg(long)]
    pub lights: Option<usize>,
    /// Square image size, default 128 [PAPER: 256].
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Surface points stored per object [PAPER: 2048].
    #[arg(long)]
    pub cloud_points: Option<usize>,
}

impl GenDataArgs {
    pub fn resolve(&self) -> DatasetPreset {
        let mut p = self.preset.preset();
        if let Some(n) = self.objects {
            p.objects = n;
        }
        if let Some(n) = self.views {
            p.views = n;
        }
        if let Some(n) = self.lights {
            p.lights = n;
        }
        if let Some(r) = self.resolution {
            p.sampling.width = r;
            p.sampling.height = r;
        }
        if let Some(n) = self.cloud_points {
            p.cloud_points = n;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum KindArg {
    OneStep,
    TwoStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ConditioningArg {
    None,
    S,
    Z,
    #[value(name = "s+z")]
    SZ,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Flat JSON configuration; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, value_enum)]
    pub conditioning: Option<ConditioningArg>,
    #[arg(long)]
    pub vae: Option<bool>,
    /// Hidden width of the field networks [PAPER: 128].
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Pixels per target view [PAPER: 2048 single-object, 500 single-view].
    #[arg(long)]
    pub pixels_per_view: Option<usize>,
    /// [PAPER: 16]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam step size [PAPER: 1e-4].
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// KL weight of the VAE objective (default 1e-3).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train on the first N views of each object only.
    #[arg(long)]
    pub max_views: Option<usize>,
    /// Train on the first N lights of each view only.
    #[arg(long)]
    pub max_lights: Option<usize>,
    /// Append one JSON line per step to this file.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

impl TrainArgs {
    pub fn flat(&self) -> Result<FlatConfig> {
        let base = match &self.config {
            Some(p) => FlatConfig::load(p)?,
            None => FlatConfig::default(),
        };
        let flags = FlatConfig {
            kind: self.kind.map(|k| match k {
                KindArg::OneStep => ModelKind::OneStep,
                KindArg::TwoStep => ModelKind::TwoStep,
            }),
            conditioning: self.conditioning.map(|c| match c {
                ConditioningArg::None => Conditioning::None,
                ConditioningArg::S => Conditioning::Shape,
                ConditioningArg::Z => Conditioning::Image,
                ConditioningArg::SZ => Conditioning::ShapeImage,
            }),
            vae: self.vae,
            hidden_dim: self.hidden_dim,
            pixels_per_view: self.pixels_per_view,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            beta: self.beta,
            steps: self.steps,
            seed: self.seed,
            max_views: self.max_views,
            max_lights: self.max_lights,
            ..FlatConfig::default()
        };
        Ok(base.merge(&flags))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated view indices to evaluate (default: all).
    #[arg(long, value_delimiter = ',')]
    pub views: Option<Vec<usize>>,
    /// View whose first light image feeds the image encoder.
    #[arg(long, default_value_t = 0)]
    pub input_view: usize,
    /// Directory for per-view error heat maps.
    #[arg(long)]
    pub error_maps: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CameraArgs {
    /// Camera position `x,y,z` [default: 1,-0.6,1]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [1.0, -0.6, 1.0], hide_default_value = true)]
    pub camera: Vec<f64>,
    /// Point the camera looks at, `x,y,z` [default: 0,0,0]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 0.0, 0.0], hide_default_value = true)]
    pub look_at: Vec<f64>,
    /// Vertical field of view in degrees.
    #[arg(long, default_value_t = 75.0)]
    pub fov: f64,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
}

fn vec3(v: &[f64], what: &str) -> Result<Vec3> {
    match v {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(Error::Usage(format!("{what} needs three comma-separated numbers"))),
    }
}

impl CameraArgs {
    pub fn camera(&self) -> Result<cslf_core::oracle::CameraModel> {
        render::camera_look_at(vec3(&self.camera, "--camera")?, vec3(&self.look_at, "--look-at")?, self.fov, self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ModeArg {
    Eq4,
    Exposure,
}

impl From<ModeArg> for CompositeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Eq4 => CompositeMode::Eq4Mean,
            ModeArg::Exposure => CompositeMode::ExposureNormalized,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ObjectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Object id such as `sphere-0` or `object-17`.
    #[arg(long)]
    pub object: String,
    /// Draw the image code from the prior with this seed instead of encoding
    /// the object's reference view.
    #[arg(long)]
    pub latent_seed: Option<u64>,
}

impl ObjectArgs {
    fn latent(&self) -> Option<Latent> {
        self.latent_seed.map(|seed| Latent::Seed { seed })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RelightArgs {
    #[command(flatten)]
    pub object: ObjectArgs,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Point light `x,y,z,r,g,b` (repeatable; several lights are averaged
    /// unless --mode is given).
    #[arg(long = "light", required = true, allow_hyphen_values = true)]
    pub lights: Vec<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RenderArgs {
    #[command(flatten)]
    pub object: ObjectArgs,
    /// Number of turntable frames.
    #[arg(long)]
    pub orbit: usize,
    #[arg(long, default_value_t = 1.5)]
    pub radius: f64,
    #[arg(long, default_value_t = 30.0)]
    pub elevation: f64,
    #[arg(long, default_value_t = 75.0)]
    pub fov: f64,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long = "light", allow_hyphen_values = true, default_values_t = [String::from("4,-4,8")])]
    pub lights: Vec<String>,
    /// Output directory for `frame_<k>.png`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnvRenderArgs {
    #[command(flatten)]
    pub object: ObjectArgs,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Equirectangular sRGB PNG; row 0 is the +z pole.
    #[arg(long)]
    pub envmap: PathBuf,
    /// Target number of equidistributed light samples.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Exposure)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    /// Checkpoints to serve; the model id is the file stem.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Environment maps as `id=path.png` (repeatable).
    #[arg(long = "envmap")]
    pub envmaps: Vec<String>,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Renders admitted at once (running plus waiting); more get 503.
    #[arg(long, default_value_t = 16)]
    pub queue: usize,
    /// Renders running in parallel.
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
    /// Allowed CORS origin (default: any).
    #[arg(long)]
    pub cors_origin: Option<String>,
}

fn record<T: Serialize>(command: &str, args: &T, path: &Path) -> Result<()> {
    let v = serde_json::to_value(args).map_err(|e| Error::Internal(e.to_string()))?;
    RunManifest::new(command, v).write(path)
}

pub fn gen_data(a: &GenDataArgs) -> Result<store::DatasetManifest> {
    let preset = a.resolve();
    log::info!(
        "generating {}: {} objects x {} views x {} lights at {}x{}",
        a.preset.name(),
        preset.objects,
        preset.views,
        preset.lights,
        preset.sampling.width,
        preset.sampling.height
    );
    let m = store::generate_dataset(&a.out, Some(a.preset.name()), &preset, a.seed, |i, id| {
        log::info!("object {}/{}: {id}", i + 1, preset.objects)
    })?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        #[serde(flatten)]
        args: &'a GenDataArgs,
        resolved_preset: DatasetPreset,
    }
    record("gen-data", &Resolved { args: a, resolved_preset: preset }, &manifest_path(&a.out, true))?;
    Ok(m)
}

pub fn train(a: &TrainArgs) -> Result<Checkpoint> {
    let flat = a.flat()?;
    let cfg = flat.to_train_config();
    cfg.validate()?;
    let (manifest, mut objects) = store::read_dataset(&a.data)?;
    if flat.max_views.is_some() || flat.max_lights.is_some() {
        limit_views(
            &mut objects,
            flat.max_views.unwrap_or(usize::MAX),
            flat.max_lights.unwrap_or(usize::MAX),
        );
    }
    let mut trainer = Trainer::new(cfg.clone())?;
    let mut log_lines = String::new();
    let every = (cfg.steps / 20).max(1);
    trainer.run(&objects, cfg.steps, |s| {
        if s.step % every == 0 || s.step + 1 == cfg.steps {
            log::info!("step {} loss {:.5}", s.step, s.loss.total);
        }
        if a.log.is_some() {
            log_lines.push_str(&serde_json::to_string(s).expect("step logs serialize"));
            log_lines.push('\n');
        }
    })?;
    if let Some(p) = &a.log {
        files::write_bytes(p, log_lines.as_bytes())?;
    }
    let steps = trainer.steps_done();
    let ckpt = Checkpoint::new(trainer.model, Some(cfg.clone()), steps, Some(manifest.preset));
    ckpt.save(&a.out)?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        #[serde(flatten)]
        args: &'a TrainArgs,
        resolved_config: FlatConfig,
    }
    let resolved = FlatConfig::resolved(&cfg, flat.max_views, flat.max_lights);
    record("train", &Resolved { args: a, resolved_config: resolved }, &manifest_path(&a.out, false))?;
    Ok(ckpt)
}

pub fn eval(a: &EvalArgs) -> Result<Vec<MetricRow>> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let model = &ckpt.model;
    let (_, objects) = store::read_dataset(&a.data)?;
    let mut rows = Vec::new();
    for obj in &objects {
        let id = obj.object_id();
        let input = obj
            .views
            .get(a.input_view)
            .ok_or_else(|| Error::Usage(format!("--input-view {} but {id} has {} views", a.input_view, obj.views.len())))?;
        let image = if model.arch().conditioning.uses_image() {
            Some(encoder_image(input, 0, model.arch().image_size)?)
        } else {
            None
        };
        let codes = model.object_codes(Some(&obj.cloud), image.as_ref())?;
        let views: Vec<usize> = a.views.clone().unwrap_or_else(|| (0..obj.views.len()).collect());
        for &vi in &views {
            let view = obj
                .views
                .get(vi)
                .ok_or_else(|| Error::Usage(format!("view {vi} but {id} has {} views", obj.views.len())))?;
            let frame = SurfaceFrame::from_view(view)?;
            let mask = frame.mask();
            for (li, light) in view.lights.iter().enumerate() {
                let pred = render_frame(model, &frame, std::slice::from_ref(light), &codes, None)?;
                let gt = view.image(li);
                rows.push(MetricRow::compute(id.clone(), vi, li, &pred, &gt, &mask)?);
                if let Some(dir) = &a.error_maps {
                    let m = error_map(&pred, &gt, &mask)?;
                    files::write_bytes(&dir.join(format!("{id}_view{vi}_light{li}.png")), &files::encode_rgba8(&m)?)?;
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Usage(String::from("nothing to evaluate")));
    }
    let n = rows.len() as f64;
    log::info!(
        "{} rows: mean L1 {:.4}, mean SSIM {:.4}",
        rows.len(),
        rows.iter().map(|r| r.l1).sum::<f64>() / n,
        rows.iter().map(|r| r.ssim).sum::<f64>() / n
    );
    write_json(&a.out, &rows)?;
    record("eval", a, &manifest_path(&a.out, false))?;
    Ok(rows)
}

fn parse_lights(specs: &[String]) -> Result<Vec<cslf_core::nets::LightConfig>> {
    specs.iter().map(|s| render::parse_light(s)).collect()
}

/// PNG bytes of a relight render.
pub fn relight_png(a: &RelightArgs) -> Result<Vec<u8>> {
    let ckpt = Checkpoint::load(&a.object.checkpoint)?;
    let job = RenderJob {
        camera: a.camera.camera()?,
        lighting: Lighting::Lights {
            lights: parse_lights(&a.lights)?,
            mode: a.mode.map(CompositeMode::from),
        },
        object_id: a.object.object.clone(),
        latent: a.object.latent(),
    };
    files::encode_png(&render::render(&ckpt, &job)?)
}

pub fn relight(a: &RelightArgs) -> Result<()> {
    files::write_bytes(&a.out, &relight_png(a)?)?;
    record("relight", a, &manifest_path(&a.out, false))
}

pub fn render_orbit(a: &RenderArgs) -> Result<Vec<PathBuf>> {
    if a.orbit == 0 {
        return Err(Error::Usage(String::from("--orbit needs at least one frame")));
    }
    let ckpt = Checkpoint::load(&a.object.checkpoint)?;
    let lights = parse_lights(&a.lights)?;
    let cams = render::orbit(a.orbit, a.radius, a.elevation, a.fov, a.width, a.height)?;
    let mut out = Vec::with_capacity(cams.len());
    for (k, camera) in cams.into_iter().enumerate() {
        let job = RenderJob {
            camera,
            lighting: Lighting::Lights {
                lights: lights.clone(),
                mode: None,
            },
            object_id: a.object.object.clone(),
            latent: a.object.latent(),
        };
        let path = a.out.join(format!("frame_{k:03}.png"));
        files::write_png(&path, &render::render(&ckpt, &job)?)?;
        out.push(path);
    }
    record("render", a, &manifest_path(&a.out, true))?;
    Ok(out)
}

pub fn env_render(a: &EnvRenderArgs) -> Result<()> {
    if a.samples == 0 {
        return Err(Error::Usage(String::from("--samples must be at least 1")));
    }
    let ckpt = Checkpoint::load(&a.object.checkpoint)?;
    let map = env_from_equirect(&files::read_png(&a.envmap)?, a.samples)?;
    let job = RenderJob {
        camera: a.camera.camera()?,
        lighting: Lighting::Env {
            map,
            mode: a.mode.into(),
        },
        object_id: a.object.object.clone(),
        latent: a.object.latent(),
    };
    files::write_png(&a.out, &render::render(&ckpt, &job)?)?;
    record("env-render", a, &manifest_path(&a.out, false))
}

pub fn serve(a: &ServeArgs) -> Result<()> {
    let mut models = Vec::with_capacity(a.models.len());
    for p in &a.models {
        let id = p
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Usage(format!("cannot derive a model id from {}", p.display())))?;
        models.push((id.to_string(), Checkpoint::load(p)?));
    }
    let mut envmaps = Vec::with_capacity(a.envmaps.len());
    for spec in &a.envmaps {
        let (id, path) = spec
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--envmap `{spec}`: expected id=path.png")))?;
        envmaps.push((id.to_string(), files::read_png(Path::new(path))?));
    }
    let state = server::AppState::new(
        models,
        envmaps,
        server::ServerConfig {
            queue: a.queue,
            workers: a.workers,
            cors_origin: a.cors_origin.clone(),
        },
    )?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Internal(e.to_string()))?;
    rt.block_on(server::serve(&format!("{}:{}", a.bind, a.port), state))
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::GenData(a) => gen_data(a).map(drop),
        Command::Train(a) => train(a).map(drop),
        Command::Eval(a) => eval(a).map(drop),
        Command::Render(a) => render_orbit(a).map(drop),
        Command::Relight(a) => relight(a),
        Command::EnvRender(a) => env_render(a),
        Command::Serve(a) => serve(a),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
