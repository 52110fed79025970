use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::conv::{reparameterize, ImageEncoder, VaeEncoder};
use super::field::{FieldNet, FieldNetSpec, OutputActivation};
use super::pointnet::PointNet;
use super::{AppearanceFeature, GeometryCode, ImageCode, LightConfig};
use crate::autodiff::{ParameterStore, Tape, Tensor, Var};
use crate::image::RgbImage;
use crate::{rng, Error, Result, Vec3};

/// Rows evaluated per frozen forward pass.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    OneStep,
    TwoStep,
}

/// Which object codes condition the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conditioning {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "s")]
    Shape,
    #[serde(rename = "z")]
    Image,
    #[serde(rename = "s+z")]
    ShapeImage,
}

impl Conditioning {
    pub fn uses_shape(self) -> bool {
        matches!(self, Conditioning::Shape | Conditioning::ShapeImage)
    }

    pub fn uses_image(self) -> bool {
        matches!(self, Conditioning::Image | Conditioning::ShapeImage)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Conditioning::None),
            "s" => Some(Conditioning::Shape),
            "z" => Some(Conditioning::Image),
            "s+z" => Some(Conditioning::ShapeImage),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Conditioning::None => "none",
            Conditioning::Shape => "s",
            Conditioning::Image => "z",
            Conditioning::ShapeImage => "s+z",
        }
    }
}

/// Architecture hyperparameters; everything needed to rebuild a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArch {
    pub kind: ModelKind,
    pub conditioning: Conditioning,
    /// `z` comes from the VAE encoder instead of the deterministic image encoder.
    pub vae: bool,
    /// When false the field sees only `(p, v)`: a plain surface light field.
    pub light_conditioned: bool,
    pub hidden_dim: usize,
    pub one_step_blocks: usize,
    pub appearance_blocks: usize,
    pub lighting_blocks: usize,
    pub feature_dim: usize,
    pub shape_dim: usize,
    pub image_dim: usize,
    pub pointnet_hidden: usize,
    pub pointnet_blocks: usize,
    pub cloud_points: usize,
    pub image_size: usize,
    pub encoder_channels: Vec<usize>,
    /// Light positions are divided by this before entering the network.
    pub light_radius: f64,
}

impl Default for ModelArch {
    fn default() -> Self {
        ModelArch {
            kind: ModelKind::TwoStep,
            conditioning: Conditioning::None,
            vae: false,
            light_conditioned: true,
            hidden_dim: 128,
            one_step_blocks: 10,
            appearance_blocks: 6,
            lighting_blocks: 5,
            feature_dim: 32,
            shape_dim: 128,
            image_dim: 128,
            pointnet_hidden: 128,
            pointnet_blocks: 5,
            cloud_points: 2048,
            image_size: 64,
            encoder_channels: vec![16, 32, 64, 128],
            light_radius: 10.0,
        }
    }
}

impl ModelArch {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("model architecture: {m}")));
        if self.hidden_dim == 0 || self.feature_dim == 0 {
            return bad("hidden and feature dims must be positive");
        }
        if self.vae && !self.conditioning.uses_image() {
            return bad("a VAE model needs image conditioning");
        }
        if self.conditioning.uses_shape() && (self.shape_dim == 0 || self.cloud_points == 0) {
            return bad("shape conditioning needs shape_dim and cloud_points");
        }
        if self.conditioning.uses_image() {
            if self.image_dim == 0 || self.encoder_channels.is_empty() {
                return bad("image conditioning needs image_dim and encoder channels");
            }
            if self.image_size < (1 << self.encoder_channels.len()) {
                return bad("image_size too small for the encoder depth");
            }
        }
        if !(self.light_radius > 0.0) {
            return bad("light_radius must be positive");
        }
        Ok(())
    }

    fn shape_width(&self) -> usize {
        if self.conditioning.uses_shape() {
            self.shape_dim
        } else {
            0
        }
    }

    fn image_width(&self) -> usize {
        if self.conditioning.uses_image() {
            self.image_dim
        } else {
            0
        }
    }

    fn light_width(&self) -> usize {
        if self.light_conditioned {
            6
        } else {
            0
        }
    }
}

/// Object codes supplied at evaluation time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Codes {
    pub shape: Option<GeometryCode>,
    pub image: Option<ImageCode>,
}

impl Codes {
    pub fn none() -> Self {
        Codes::default()
    }
}

/// Output of the VAE encoder for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeSample {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
    pub z: Vec<f64>,
}

/// Graph inputs for `groups` objects with `rows_per_group` points each.
#[derive(Debug, Clone, Copy)]
pub struct GroupInputs {
    /// `[groups * rows_per_group, 3]`
    pub points: Var,
    /// `[groups * rows_per_group, 3]`
    pub dirs: Var,
    /// `[groups, 6]`, see [`LightConfig::features`].
    pub lights: Option<Var>,
    /// `[groups, shape_dim]`
    pub shape: Option<Var>,
    /// `[groups, image_dim]`
    pub image: Option<Var>,
    pub rows_per_group: usize,
}

#[derive(Debug, Clone)]
enum Field {
    OneStep(FieldNet),
    TwoStep { appearance: FieldNet, lighting: FieldNet },
}

/// A complete conditional surface light field: field network(s), optional
/// encoders and the parameter store they share.
#[derive(Debug, Clone)]
pub struct CslfModel {
    arch: ModelArch,
    store: ParameterStore,
    field: Field,
    pointnet: Option<PointNet>,
    image_encoder: Option<ImageEncoder>,
    vae_encoder: Option<VaeEncoder>,
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl CslfModel {
    pub fn new(arch: ModelArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng::seeded(seed);
        let mut store = ParameterStore::new();
        let (s, z, l) = (arch.shape_width(), arch.image_width(), arch.light_width());
        let h = arch.hidden_dim;
        let field = match arch.kind {
            ModelKind::OneStep => Field::OneStep(FieldNet::new(
                &mut store,
                "field",
                FieldNetSpec {
                    in_dim: 6,
                    hidden_dim: h,
                    cond_dim: z + l + s,
                    blocks: arch.one_step_blocks,
                    out_dim: 3,
                    output: OutputActivation::Sigmoid,
                },
                &mut rng,
            )?),
            ModelKind::TwoStep => {
                let appearance = FieldNet::new(
                    &mut store,
                    "appearance",
                    FieldNetSpec {
                        in_dim: 3,
                        hidden_dim: h,
                        cond_dim: s + z,
                        blocks: arch.appearance_blocks,
                        out_dim: arch.feature_dim,
                        output: OutputActivation::Identity,
                    },
                    &mut rng,
                )?;
                let lighting = FieldNet::new(
                    &mut store,
                    "lighting",
                    FieldNetSpec {
                        in_dim: arch.feature_dim + 3,
                        hidden_dim: h,
                        cond_dim: l + s,
                        blocks: arch.lighting_blocks,
                        out_dim: 3,
                        output: OutputActivation::Sigmoid,
                    },
                    &mut rng,
                )?;
                Field::TwoStep {
                    appearance,
                    lighting,
                }
            }
        };
        let pointnet = if arch.conditioning.uses_shape() {
            Some(PointNet::new(
                &mut store,
                "pointnet",
                arch.pointnet_hidden,
                arch.pointnet_blocks,
                arch.shape_dim,
                &mut rng,
            )?)
        } else {
            None
        };
        let (image_encoder, vae_encoder) = match (arch.conditioning.uses_image(), arch.vae) {
            (false, _) => (None, None),
            (true, false) => (
                Some(ImageEncoder::new(
                    &mut store,
                    "image_encoder",
                    &arch.encoder_channels,
                    arch.image_dim,
                    &mut rng,
                )?),
                None,
            ),
            (true, true) => (
                None,
                Some(VaeEncoder::new(
                    &mut store,
                    "vae_encoder",
                    &arch.encoder_channels,
                    s,
                    arch.image_dim,
                    &mut rng,
                )?),
            ),
        };
        Ok(CslfModel {
            arch,
            store,
            field,
            pointnet,
            image_encoder,
            vae_encoder,
        })
    }

    pub fn arch(&self) -> &ModelArch {
        &self.arch
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    pub fn one_step_net(&self) -> Option<&FieldNet> {
        match &self.field {
            Field::OneStep(n) => Some(n),
            Field::TwoStep { .. } => None,
        }
    }

    pub fn appearance_net(&self) -> Option<&FieldNet> {
        match &self.field {
            Field::TwoStep { appearance, .. } => Some(appearance),
            Field::OneStep(_) => None,
        }
    }

    pub fn lighting_net(&self) -> Option<&FieldNet> {
        match &self.field {
            Field::TwoStep { lighting, .. } => Some(lighting),
            Field::OneStep(_) => None,
        }
    }

    // ----- graph level (training and gradient checks) -----

    /// `[groups * cloud_len, 3] -> [groups, shape_dim]`.
    pub fn shape_codes(&self, tape: &mut Tape, clouds: Var, cloud_len: usize) -> Result<Var> {
        let net = self
            .pointnet
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(String::from("model has no shape encoder")))?;
        net.forward(tape, &self.store, clouds, cloud_len)
    }

    /// `[groups, h, w, 3] -> [groups, image_dim]`.
    pub fn image_codes(&self, tape: &mut Tape, images: Var) -> Result<Var> {
        let enc = self
            .image_encoder
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(String::from("model has no deterministic image encoder")))?;
        enc.forward(tape, &self.store, images)
    }

    /// `(mu, logvar)` of the approximate posterior.
    pub fn vae_posterior(&self, tape: &mut Tape, images: Var, shape: Option<Var>) -> Result<(Var, Var)> {
        let enc = self
            .vae_encoder
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(String::from("model has no VAE encoder")))?;
        enc.forward(tape, &self.store, images, shape)
    }

    fn cond_parts(&self, parts: &[Option<Var>]) -> Vec<Var> {
        parts.iter().flatten().copied().collect()
    }

    fn join_cond(&self, tape: &mut Tape, parts: &[Option<Var>]) -> Result<Option<Var>> {
        let parts = self.cond_parts(parts);
        match parts.len() {
            0 => Ok(None),
            1 => Ok(Some(parts[0])),
            _ => tape.concat(&parts).map(Some),
        }
    }

    fn check_group_inputs(&self, g: &GroupInputs) -> Result<()> {
        let a = &self.arch;
        let expect = |present: bool, wanted: bool, what: &str| -> Result<()> {
            if present == wanted {
                Ok(())
            } else {
                Err(Error::CodeMismatch {
                    expected: format!("{what} {}", if wanted { "present" } else { "absent" }),
                    got: String::from(if present { "present" } else { "absent" }),
                })
            }
        };
        expect(g.lights.is_some(), a.light_conditioned, "light")?;
        expect(g.shape.is_some(), a.conditioning.uses_shape(), "shape code s")?;
        expect(g.image.is_some(), a.conditioning.uses_image(), "image code z")
    }

    /// Appearance features `[rows, feature_dim]` (2-step models only).
    pub fn appearance_graph(
        &self,
        tape: &mut Tape,
        points: Var,
        shape: Option<Var>,
        image: Option<Var>,
        rows_per_group: usize,
    ) -> Result<Var> {
        let Field::TwoStep { appearance, .. } = &self.field else {
            return Err(Error::InvalidInput(String::from("appearance field needs a 2-step model")));
        };
        let cond = self.join_cond(tape, &[shape, image])?;
        appearance.forward(tape, &self.store, points, cond, rows_per_group)
    }

    /// Lighting model on precomputed features (2-step models only).
    pub fn lighting_graph(
        &self,
        tape: &mut Tape,
        features: Var,
        dirs: Var,
        lights: Option<Var>,
        shape: Option<Var>,
        rows_per_group: usize,
    ) -> Result<Var> {
        let Field::TwoStep { lighting, .. } = &self.field else {
            return Err(Error::InvalidInput(String::from("lighting model needs a 2-step model")));
        };
        let x = tape.concat(&[features, dirs])?;
        let cond = self.join_cond(tape, &[lights, shape])?;
        lighting.forward(tape, &self.store, x, cond, rows_per_group)
    }

    /// Predicted sRGB colors `[rows, 3]`.
    pub fn field_graph(&self, tape: &mut Tape, g: &GroupInputs) -> Result<Var> {
        self.check_group_inputs(g)?;
        match &self.field {
            Field::OneStep(net) => {
                let x = tape.concat(&[g.points, g.dirs])?;
                let cond = self.join_cond(tape, &[g.image, g.lights, g.shape])?;
                net.forward(tape, &self.store, x, cond, g.rows_per_group)
            }
            Field::TwoStep { .. } => {
                let f = self.appearance_graph(tape, g.points, g.shape, g.image, g.rows_per_group)?;
                self.lighting_graph(tape, f, g.dirs, g.lights, g.shape, g.rows_per_group)
            }
        }
    }

    // ----- frozen evaluation -----

    fn check_codes(&self, codes: &Codes) -> Result<()> {
        let a = &self.arch;
        let check = |dim: Option<usize>, want: usize, uses: bool, what: &str| -> Result<()> {
            match (dim, uses) {
                (None, false) => Ok(()),
                (Some(d), true) if d == want => Ok(()),
                (got, _) => Err(Error::CodeMismatch {
                    expected: if uses {
                        format!("{what} of width {want}")
                    } else {
                        format!("no {what}")
                    },
                    got: match got {
                        Some(d) => format!("{what} of width {d}"),
                        None => format!("no {what}"),
                    },
                }),
            }
        };
        check(codes.shape.as_ref().map(|c| c.0.len()), a.shape_dim, a.conditioning.uses_shape(), "shape code")?;
        check(codes.image.as_ref().map(|c| c.0.len()), a.image_dim, a.conditioning.uses_image(), "image code")?;
        if let Some(s) = &codes.shape {
            check_finite(&s.0, "shape code")?;
        }
        if let Some(z) = &codes.image {
            check_finite(&z.0, "image code")?;
        }
        Ok(())
    }

    fn code_vars(&self, tape: &mut Tape, codes: &Codes) -> Result<(Option<Var>, Option<Var>)> {
        let s = match &codes.shape {
            Some(c) => Some(tape.constant(vec![1, c.0.len()], c.0.clone())?),
            None => None,
        };
        let z = match &codes.image {
            Some(c) => Some(tape.constant(vec![1, c.0.len()], c.0.clone())?),
            None => None,
        };
        Ok((s, z))
    }

    fn light_var(&self, tape: &mut Tape, light: Option<&LightConfig>) -> Result<Option<Var>> {
        match (light, self.arch.light_conditioned) {
            (Some(l), true) => {
                if !l.is_valid() {
                    return Err(Error::InvalidInput(format!("invalid light {l:?}")));
                }
                Ok(Some(tape.constant(vec![1, 6], l.features(self.arch.light_radius).to_vec())?))
            }
            (None, false) => Ok(None),
            (Some(_), false) => Err(Error::CodeMismatch {
                expected: String::from("no light (unconditioned surface light field)"),
                got: String::from("a light"),
            }),
            (None, true) => Err(Error::CodeMismatch {
                expected: String::from("a light configuration"),
                got: String::from("none"),
            }),
        }
    }

    fn points_tensor(points: &[Vec3], what: &'static str) -> Result<Tensor> {
        let data: Vec<f64> = points.iter().flat_map(|p| p.to_array()).collect();
        check_finite(&data, what)?;
        Tensor::matrix(points.len(), 3, data)
    }

    fn check_dirs(dirs: &[Vec3]) -> Result<()> {
        for d in dirs {
            if !d.is_finite() {
                return Err(Error::NonFinite("view direction"));
            }
            if (d.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!("view direction {d:?} is not unit length")));
            }
        }
        Ok(())
    }

    /// Predicted sRGB color for every `(point, direction)` pair under one light.
    pub fn predict(
        &self,
        points: &[Vec3],
        dirs: &[Vec3],
        light: Option<&LightConfig>,
        codes: &Codes,
    ) -> Result<Vec<[f64; 3]>> {
        if points.len() != dirs.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} view directions",
                points.len(),
                dirs.len()
            )));
        }
        match &self.field {
            Field::TwoStep { .. } => {
                let feats = self.appearance_features(points, codes)?;
                self.shade_features(&feats, dirs, light, codes)
            }
            Field::OneStep(_) => {
                self.check_codes(codes)?;
                Self::check_dirs(dirs)?;
                let mut out = Vec::with_capacity(points.len());
                for (pc, dc) in points.chunks(CHUNK).zip(dirs.chunks(CHUNK)) {
                    let mut tape = Tape::inference();
                    let p = tape.leaf(Self::points_tensor(pc, "surface point")?);
                    let d = tape.leaf(Self::points_tensor(dc, "view direction")?);
                    let (s, z) = self.code_vars(&mut tape, codes)?;
                    let l = self.light_var(&mut tape, light)?;
                    let rgb = self.field_graph(
                        &mut tape,
                        &GroupInputs {
                            points: p,
                            dirs: d,
                            lights: l,
                            shape: s,
                            image: z,
                            rows_per_group: pc.len(),
                        },
                    )?;
                    out.extend(tape.value(rgb).chunks(3).map(|c| [c[0], c[1], c[2]]));
                }
                Ok(out)
            }
        }
    }

    /// Appearance features for many points; row-major `[n, feature_dim]`.
    pub fn appearance_features(&self, points: &[Vec3], codes: &Codes) -> Result<Vec<f64>> {
        self.check_codes(codes)?;
        let mut out = Vec::with_capacity(points.len() * self.arch.feature_dim);
        for pc in points.chunks(CHUNK) {
            let mut tape = Tape::inference();
            let p = tape.leaf(Self::points_tensor(pc, "surface point")?);
            let (s, z) = self.code_vars(&mut tape, codes)?;
            let f = self.appearance_graph(&mut tape, p, s, z, pc.len())?;
            out.extend_from_slice(tape.value(f));
        }
        Ok(out)
    }

    /// Lighting model on cached features (row-major `[n, feature_dim]`).
    pub fn shade_features(
        &self,
        features: &[f64],
        dirs: &[Vec3],
        light: Option<&LightConfig>,
        codes: &Codes,
    ) -> Result<Vec<[f64; 3]>> {
        self.check_codes(codes)?;
        Self::check_dirs(dirs)?;
        let d_f = self.arch.feature_dim;
        if features.len() != dirs.len() * d_f {
            return Err(Error::InvalidInput(format!(
                "feature buffer of {} values does not match {} directions x {d_f}",
                features.len(),
                dirs.len()
            )));
        }
        check_finite(features, "appearance feature")?;
        let mut out = Vec::with_capacity(dirs.len());
        for (fc, dc) in features.chunks(CHUNK * d_f).zip(dirs.chunks(CHUNK)) {
            let mut tape = Tape::inference();
            let f = tape.constant(vec![dc.len(), d_f], fc.to_vec())?;
            let d = tape.leaf(Self::points_tensor(dc, "view direction")?);
            let (s, _) = self.code_vars(&mut tape, codes)?;
            let l = self.light_var(&mut tape, light)?;
            let rgb = self.lighting_graph(&mut tape, f, d, l, s, dc.len())?;
            out.extend(tape.value(rgb).chunks(3).map(|c| [c[0], c[1], c[2]]));
        }
        Ok(out)
    }

    /// 1-step field at one point.
    pub fn one_step_forward(&self, p: Vec3, v: Vec3, l: &LightConfig, codes: &Codes) -> Result<[f64; 3]> {
        if self.arch.kind != ModelKind::OneStep {
            return Err(Error::InvalidInput(String::from("not a 1-step model")));
        }
        Ok(self.predict(&[p], &[v], Some(l), codes)?[0])
    }

    /// Appearance field at one point; independent of view and light.
    pub fn appearance_forward(&self, p: Vec3, codes: &Codes) -> Result<AppearanceFeature> {
        Ok(AppearanceFeature(self.appearance_features(&[p], codes)?))
    }

    /// Lighting model for one feature vector.
    pub fn lighting_forward(
        &self,
        f: &AppearanceFeature,
        v: Vec3,
        l: &LightConfig,
        codes: &Codes,
    ) -> Result<[f64; 3]> {
        if f.0.len() != self.arch.feature_dim {
            return Err(Error::ShapeMismatch {
                op: "lighting_forward",
                lhs: vec![f.0.len()],
                rhs: vec![self.arch.feature_dim],
            });
        }
        Ok(self.shade_features(&f.0, &[v], Some(l), codes)?[0])
    }

    pub fn encode_shape(&self, cloud: &[Vec3]) -> Result<GeometryCode> {
        if cloud.len() != self.arch.cloud_points {
            return Err(Error::InvalidInput(format!(
                "point cloud has {} points, encoder expects {}",
                cloud.len(),
                self.arch.cloud_points
            )));
        }
        let mut tape = Tape::inference();
        let p = tape.leaf(Self::points_tensor(cloud, "point cloud")?);
        let s = self.shape_codes(&mut tape, p, cloud.len())?;
        Ok(GeometryCode(tape.value(s).to_vec()))
    }

    fn image_var(&self, tape: &mut Tape, image: &RgbImage) -> Result<Var> {
        let n = self.arch.image_size;
        if image.width != n || image.height != n {
            return Err(Error::InvalidInput(format!(
                "image is {}x{}, encoder expects {n}x{n}",
                image.width, image.height
            )));
        }
        let data = image.flat();
        check_finite(&data, "image")?;
        tape.constant(vec![1, n, n, 3], data)
    }

    pub fn encode_image(&self, image: &RgbImage) -> Result<ImageCode> {
        let mut tape = Tape::inference();
        let x = self.image_var(&mut tape, image)?;
        let z = self.image_codes(&mut tape, x)?;
        Ok(ImageCode(tape.value(z).to_vec()))
    }

    /// Posterior parameters and one reparameterized sample drawn from `seed`.
    pub fn vae_encode(&self, image: &RgbImage, shape: Option<&GeometryCode>, seed: u64) -> Result<VaeSample> {
        let mut tape = Tape::inference();
        let x = self.image_var(&mut tape, image)?;
        let s = match shape {
            Some(s) => {
                check_finite(&s.0, "shape code")?;
                Some(tape.constant(vec![1, s.0.len()], s.0.clone())?)
            }
            None => None,
        };
        let (mu, logvar) = self.vae_posterior(&mut tape, x, s)?;
        let eps = standard_normal(seed, self.arch.image_dim);
        let eps = tape.constant(vec![1, self.arch.image_dim], eps)?;
        let z = reparameterize(&mut tape, mu, logvar, eps)?;
        Ok(VaeSample {
            mu: tape.value(mu).to_vec(),
            logvar: tape.value(logvar).to_vec(),
            z: tape.value(z).to_vec(),
        })
    }
}

impl CslfModel {
    /// Codes for one object from its surface cloud (at least `cloud_points`
    /// points; the prefix is used) and an encoder input image. VAE models use
    /// the posterior mean.
    pub fn object_codes(&self, cloud: Option<&[Vec3]>, image: Option<&RgbImage>) -> Result<Codes> {
        let c = self.arch.conditioning;
        let shape = if c.uses_shape() {
            let cloud = cloud.ok_or_else(|| Error::InvalidInput(String::from("model needs a point cloud")))?;
            if cloud.len() < self.arch.cloud_points {
                return Err(Error::InvalidInput(format!(
                    "point cloud has {} points, encoder expects {}",
                    cloud.len(),
                    self.arch.cloud_points
                )));
            }
            Some(self.encode_shape(&cloud[..self.arch.cloud_points])?)
        } else {
            None
        };
        let image = if c.uses_image() {
            let img = image.ok_or_else(|| Error::InvalidInput(String::from("model needs an input image")))?;
            Some(if self.arch.vae {
                ImageCode(self.vae_encode(img, shape.as_ref(), 0)?.mu)
            } else {
                self.encode_image(img)?
            })
        } else {
            None
        };
        Ok(Codes { shape, image })
    }
}

/// `n` draws from `N(0, 1)`.
pub fn standard_normal(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}
