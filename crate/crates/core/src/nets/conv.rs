use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::layers::{join, Linear};
use crate::autodiff::{kaiming_uniform, ConvSpec, ParamId, ParameterStore, Tape, Tensor, Var};
use crate::rng::Rng;
use crate::Result;

const STAGE: ConvSpec = ConvSpec {
    kernel: 3,
    stride: 2,
    padding: 1,
};

/// Strided 3x3 conv stages with ReLU, followed by global average pooling.
#[derive(Debug, Clone)]
pub struct ConvTrunk {
    stages: Vec<(ParamId, ParamId)>,
    pub out_channels: usize,
}

impl ConvTrunk {
    pub fn new(store: &mut ParameterStore, prefix: &str, channels: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut cin = 3;
        let mut stages = Vec::with_capacity(channels.len());
        for (i, &cout) in channels.iter().enumerate() {
            let fan_in = STAGE.kernel * STAGE.kernel * cin;
            let w = kaiming_uniform(rng, fan_in, vec![fan_in, cout])?;
            let w = store.register(join(prefix, &format!("conv{i}.weight")), w)?;
            let b = store.register(join(prefix, &format!("conv{i}.bias")), Tensor::zeros(vec![cout])?)?;
            stages.push((w, b));
            cin = cout;
        }
        Ok(ConvTrunk {
            stages,
            out_channels: cin,
        })
    }

    /// `images: [b, h, w, 3]` -> `[b, out_channels]`.
    pub fn forward(&self, tape: &mut Tape, store: &ParameterStore, images: Var) -> Result<Var> {
        let mut x = images;
        for &(w, b) in &self.stages {
            let wv = tape.param(store, w);
            let bv = tape.param(store, b);
            let y = tape.conv2d(x, wv, STAGE)?;
            let y = tape.add_bias(y, bv)?;
            x = tape.relu(y);
        }
        tape.global_avg_pool(x)
    }
}

/// Image -> appearance code `z`.
#[derive(Debug, Clone)]
pub struct ImageEncoder {
    trunk: ConvTrunk,
    head: Linear,
}

impl ImageEncoder {
    pub fn new(store: &mut ParameterStore, prefix: &str, channels: &[usize], out_dim: usize, rng: &mut Rng) -> Result<Self> {
        let trunk = ConvTrunk::new(store, prefix, channels, rng)?;
        let head = Linear::new(store, &join(prefix, "head"), trunk.out_channels, out_dim, rng)?;
        Ok(ImageEncoder { trunk, head })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParameterStore, images: Var) -> Result<Var> {
        let f = self.trunk.forward(tape, store, images)?;
        self.head.forward(tape, store, f)
    }
}

/// Image and shape code -> diagonal Gaussian `(mu, logvar)` over `z`.
#[derive(Debug, Clone)]
pub struct VaeEncoder {
    trunk: ConvTrunk,
    mu: Linear,
    logvar: Linear,
    shape_dim: usize,
}

impl VaeEncoder {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        channels: &[usize],
        shape_dim: usize,
        out_dim: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let trunk = ConvTrunk::new(store, prefix, channels, rng)?;
        let joint = trunk.out_channels + shape_dim;
        let mu = Linear::new(store, &join(prefix, "mu"), joint, out_dim, rng)?;
        let logvar = Linear::zeroed(store, &join(prefix, "logvar"), joint, out_dim)?;
        Ok(VaeEncoder {
            trunk,
            mu,
            logvar,
            shape_dim,
        })
    }

    /// Returns `(mu, logvar)`, each `[b, out_dim]`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        images: Var,
        shape_code: Option<Var>,
    ) -> Result<(Var, Var)> {
        let f = self.trunk.forward(tape, store, images)?;
        let joint = match shape_code {
            Some(s) if self.shape_dim > 0 => tape.concat(&[f, s])?,
            None if self.shape_dim == 0 => f,
            _ => {
                return Err(crate::Error::InvalidInput(format!(
                    "VAE encoder expects a shape code of width {}",
                    self.shape_dim
                )))
            }
        };
        Ok((
            self.mu.forward(tape, store, joint)?,
            self.logvar.forward(tape, store, joint)?,
        ))
    }
}

/// `z = mu + exp(logvar / 2) * eps` with `eps` supplied by the caller.
pub fn reparameterize(tape: &mut Tape, mu: Var, logvar: Var, eps: Var) -> Result<Var> {
    let half = tape.scale(logvar, 0.5);
    let std = tape.exp(half);
    let noise = tape.mul(std, eps)?;
    tape.add(mu, noise)
}
