//! Photometric and VAE training of conditional light fields.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, Tape, Var};
use crate::dataset::{encoder_image, sample_batch, BatchItem, ObjectData};
use crate::nets::{reparameterize, CslfModel, GroupInputs, ModelArch};
use crate::{rng, Error, Result};

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub arch: ModelArch,
    /// Pixels sampled from each target view.
    pub pixels_per_view: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the KL term for VAE models.
    pub beta: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arch: ModelArch::default(),
            pixels_per_view: 2048,
            batch_size: 16,
            learning_rate: 1e-4,
            beta: 1e-3,
            steps: 1000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        if self.pixels_per_view == 0 || self.batch_size == 0 {
            return Err(Error::InvalidInput(String::from("pixels_per_view and batch_size must be at least 1")));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidInput(format!("beta {} must be non-negative", self.beta)));
        }
        AdamConfig::with_learning_rate(self.learning_rate).validate()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_learning_rate(self.learning_rate)
    }
}

/// Dense training inputs for `groups` batch elements of `rows_per_group`
/// pixels each.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainBatch {
    pub groups: usize,
    pub rows_per_group: usize,
    /// `[groups * rows, 3]`
    pub points: Vec<f64>,
    pub dirs: Vec<f64>,
    pub targets: Vec<f64>,
    /// `[groups, 6]` normalized light features.
    pub lights: Option<Vec<f64>>,
    /// `[groups * cloud_points, 3]`
    pub clouds: Option<Vec<f64>>,
    /// `[groups, size, size, 3]`
    pub images: Option<Vec<f64>>,
}

impl TrainBatch {
    /// Gathers the tensors a model with architecture `arch` needs.
    pub fn assemble(objects: &[ObjectData], items: &[BatchItem], arch: &ModelArch) -> Result<Self> {
        let first = items.first().ok_or(Error::Empty("batch"))?;
        let n = first.samples.len();
        if n == 0 || items.iter().any(|it| it.samples.len() != n) {
            return Err(Error::InvalidInput(String::from(
                "every batch element needs the same positive pixel count",
            )));
        }
        let mut b = TrainBatch {
            groups: items.len(),
            rows_per_group: n,
            points: Vec::with_capacity(items.len() * n * 3),
            dirs: Vec::with_capacity(items.len() * n * 3),
            targets: Vec::with_capacity(items.len() * n * 3),
            lights: arch.light_conditioned.then(Vec::new),
            clouds: arch.conditioning.uses_shape().then(Vec::new),
            images: arch.conditioning.uses_image().then(Vec::new),
        };
        for it in items {
            let obj = objects
                .get(it.object)
                .ok_or_else(|| Error::InvalidInput(format!("batch refers to object {}", it.object)))?;
            for s in &it.samples {
                b.points.extend(s.p.to_array());
                b.dirs.extend(s.v.to_array());
                b.targets.extend(s.target);
            }
            if let Some(l) = &mut b.lights {
                l.extend(it.light.features(arch.light_radius));
            }
            if let Some(c) = &mut b.clouds {
                if obj.cloud.len() < arch.cloud_points {
                    return Err(Error::InvalidInput(format!(
                        "object cloud has {} points, encoder expects {}",
                        obj.cloud.len(),
                        arch.cloud_points
                    )));
                }
                c.extend(obj.cloud[..arch.cloud_points].iter().flat_map(|p| p.to_array()));
            }
            if let Some(im) = &mut b.images {
                let view = obj
                    .views
                    .get(it.input_view)
                    .ok_or_else(|| Error::InvalidInput(format!("batch refers to view {}", it.input_view)))?;
                im.extend(encoder_image(view, it.input_light, arch.image_size)?.flat());
            }
        }
        Ok(b)
    }
}

/// Loss terms of one step (KL only for VAE models).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub recon: f64,
    pub kl: Option<f64>,
}

/// Mean absolute error over all rows and channels, a scalar var.
pub fn photometric_l1(tape: &mut Tape, pred: Var, target: Var) -> Result<Var> {
    let d = tape.sub(pred, target)?;
    let a = tape.abs(d);
    Ok(tape.mean(a))
}

/// Batch mean of `KL(N(mu, exp(logvar)) || N(0, I))` for `[groups, dim]`
/// inputs, built on the tape.
pub fn kl_graph(tape: &mut Tape, mu: Var, logvar: Var) -> Result<Var> {
    let groups = tape.shape(mu)[0];
    let mu2 = tape.mul(mu, mu)?;
    let var = tape.exp(logvar);
    let t = tape.add(mu2, var)?;
    let t = tape.sub(t, logvar)?;
    let t = tape.add_scalar(t, -1.0);
    let s = tape.sum(t);
    Ok(tape.scale(s, 0.5 / groups as f64))
}

/// Closed-form KL divergence of a diagonal Gaussian from the standard normal.
pub fn kl_divergence(mu: &[f64], logvar: &[f64]) -> Result<f64> {
    if mu.len() != logvar.len() {
        return Err(Error::ShapeMismatch {
            op: "kl_divergence",
            lhs: vec![mu.len()],
            rhs: vec![logvar.len()],
        });
    }
    Ok(0.5
        * mu.iter()
            .zip(logvar)
            .map(|(m, lv)| m * m + crate::math::exp(*lv) - lv - 1.0)
            .sum::<f64>())
}

/// Builds the training loss of `model` on `batch`. For VAE models the
/// image code is a reparameterized posterior sample drawn with `eps_seed`.
pub fn loss_graph(
    model: &CslfModel,
    tape: &mut Tape,
    batch: &TrainBatch,
    beta: f64,
    eps_seed: u64,
) -> Result<(Var, Var, Option<Var>)> {
    let arch = model.arch();
    let rows = batch.groups * batch.rows_per_group;
    let points = tape.constant(vec![rows, 3], batch.points.clone())?;
    let dirs = tape.constant(vec![rows, 3], batch.dirs.clone())?;
    let target = tape.constant(vec![rows, 3], batch.targets.clone())?;
    let lights = match &batch.lights {
        Some(l) => Some(tape.constant(vec![batch.groups, 6], l.clone())?),
        None => None,
    };
    let shape = match &batch.clouds {
        Some(c) => {
            let clouds = tape.constant(vec![batch.groups * arch.cloud_points, 3], c.clone())?;
            Some(model.shape_codes(tape, clouds, arch.cloud_points)?)
        }
        None => None,
    };
    let mut kl = None;
    let image = match &batch.images {
        Some(im) => {
            let n = arch.image_size;
            let images = tape.constant(vec![batch.groups, n, n, 3], im.clone())?;
            if arch.vae {
                let (mu, logvar) = model.vae_posterior(tape, images, shape)?;
                let eps = crate::nets::standard_normal(eps_seed, batch.groups * arch.image_dim);
                let eps = tape.constant(vec![batch.groups, arch.image_dim], eps)?;
                kl = Some(kl_graph(tape, mu, logvar)?);
                Some(reparameterize(tape, mu, logvar, eps)?)
            } else {
                Some(model.image_codes(tape, images)?)
            }
        }
        None => None,
    };
    let pred = model.field_graph(
        tape,
        &GroupInputs {
            points,
            dirs,
            lights,
            shape,
            image,
            rows_per_group: batch.rows_per_group,
        },
    )?;
    let recon = photometric_l1(tape, pred, target)?;
    let total = match kl {
        Some(k) => {
            let weighted = tape.scale(k, beta);
            tape.add(recon, weighted)?
        }
        None => recon,
    };
    Ok((total, recon, kl))
}

fn step_with(model: &mut CslfModel, batch: &TrainBatch, adam: &AdamConfig, beta: f64, eps_seed: u64) -> Result<LossTerms> {
    let mut tape = Tape::new();
    let (total, recon, kl) = loss_graph(model, &mut tape, batch, beta, eps_seed)?;
    let terms = LossTerms {
        total: tape.value(total)[0],
        recon: tape.value(recon)[0],
        kl: kl.map(|k| tape.value(k)[0]),
    };
    if !terms.total.is_finite() {
        return Err(Error::NonFinite("training loss"));
    }
    let store = model.store_mut();
    store.zero_grad();
    tape.backward_into(total, store)?;
    store.adam_step(adam)?;
    Ok(terms)
}

/// One Adam step on the photometric L1 loss; returns the loss before the
/// update.
pub fn train_step_supervised(model: &mut CslfModel, batch: &TrainBatch, adam: &AdamConfig) -> Result<f64> {
    if model.arch().vae {
        return Err(Error::InvalidInput(String::from("VAE models train with train_step_vae")));
    }
    Ok(step_with(model, batch, adam, 0.0, 0)?.total)
}

/// One Adam step on `beta * KL + L1`; returns `(total, kl, recon)`.
pub fn train_step_vae(
    model: &mut CslfModel,
    batch: &TrainBatch,
    adam: &AdamConfig,
    beta: f64,
    eps_seed: u64,
) -> Result<(f64, f64, f64)> {
    if !model.arch().vae {
        return Err(Error::InvalidInput(String::from("model has no VAE encoder")));
    }
    let t = step_with(model, batch, adam, beta, eps_seed)?;
    Ok((t.total, t.kl.unwrap_or(0.0), t.recon))
}

/// Linear interpolation between two latent codes.
pub fn latent_interpolate(a: &[f64], b: &[f64], t: f64) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            op: "latent_interpolate",
            lhs: vec![a.len()],
            rhs: vec![b.len()],
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect())
}

/// Loss record of one training step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    #[serde(flatten)]
    pub loss: LossTerms,
}

/// Owns a model and runs deterministic training steps over a dataset.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: CslfModel,
    pub config: TrainConfig,
    step: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let model = CslfModel::new(config.arch.clone(), rng::derive_seed(config.seed, 0x1417))?;
        Ok(Trainer {
            model,
            config,
            step: 0,
        })
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    /// Batch draw of step `step`.
    pub fn batch_items(&self, objects: &[ObjectData], step: usize) -> Result<Vec<BatchItem>> {
        let c = &self.config;
        sample_batch(
            objects,
            c.batch_size,
            c.pixels_per_view,
            rng::derive_seed(c.seed, 0xba7c_0000_0000 + step as u64),
        )
    }

    pub fn step(&mut self, objects: &[ObjectData]) -> Result<StepLog> {
        let items = self.batch_items(objects, self.step)?;
        let batch = TrainBatch::assemble(objects, &items, &self.config.arch)?;
        let eps_seed = rng::derive_seed(self.config.seed, 0xe95_0000_0000 + self.step as u64);
        let loss = step_with(&mut self.model, &batch, &self.config.adam(), self.config.beta, eps_seed)?;
        let log = StepLog { step: self.step, loss };
        self.step += 1;
        Ok(log)
    }

    /// Runs `steps` steps, reporting each one.
    pub fn run(&mut self, objects: &[ObjectData], steps: usize, mut on_step: impl FnMut(&StepLog)) -> Result<()> {
        for _ in 0..steps {
            let log = self.step(objects)?;
            on_step(&log);
        }
        Ok(())
    }
}
