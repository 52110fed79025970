use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::autodiff::{kaiming_uniform, ParamId, ParameterStore, Tape, Tensor, Var};
use crate::rng::Rng;
use crate::Result;

/// Affine map `x W + b` with `W: [in, out]`.
#[derive(Debug, Clone)]
pub struct Linear {
    weight: ParamId,
    bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    /// Kaiming-uniform weight, zero bias.
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let w = kaiming_uniform(rng, in_dim, vec![in_dim, out_dim])?;
        Self::with_weight(store, name, w)
    }

    pub fn zeroed(store: &mut ParameterStore, name: &str, in_dim: usize, out_dim: usize) -> Result<Self> {
        Self::with_weight(store, name, Tensor::zeros(vec![in_dim, out_dim])?)
    }

    fn with_weight(store: &mut ParameterStore, name: &str, w: Tensor) -> Result<Self> {
        let (in_dim, out_dim) = (w.shape()[0], w.shape()[1]);
        let weight = store.register(format!("{name}.weight"), w)?;
        let bias = store.register(format!("{name}.bias"), Tensor::zeros(vec![out_dim])?)?;
        Ok(Linear {
            weight,
            bias,
            in_dim,
            out_dim,
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParameterStore, x: Var) -> Result<Var> {
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let y = tape.matmul(x, w)?;
        tape.add_bias(y, b)
    }

    pub fn weight(&self) -> ParamId {
        self.weight
    }

    pub fn bias(&self) -> ParamId {
        self.bias
    }
}

/// Pre-activation fully-connected residual block:
/// `shortcut(x) + fc1(relu(fc0(relu(x))))`.
///
/// `fc1` starts at zero so a freshly built deep stack is close to the
/// identity map.
#[derive(Debug, Clone)]
pub struct ResBlock {
    fc0: Linear,
    fc1: Linear,
    shortcut: Option<Linear>,
}

impl ResBlock {
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let hidden = in_dim.min(out_dim);
        let fc0 = Linear::new(store, &format!("{name}.fc0"), in_dim, hidden, rng)?;
        let fc1 = Linear::zeroed(store, &format!("{name}.fc1"), hidden, out_dim)?;
        let shortcut = if in_dim != out_dim {
            Some(Linear::new(store, &format!("{name}.shortcut"), in_dim, out_dim, rng)?)
        } else {
            None
        };
        Ok(ResBlock { fc0, fc1, shortcut })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParameterStore, x: Var) -> Result<Var> {
        let a = tape.relu(x);
        let h = self.fc0.forward(tape, store, a)?;
        let h = tape.relu(h);
        let dx = self.fc1.forward(tape, store, h)?;
        let xs = match &self.shortcut {
            Some(s) => s.forward(tape, store, x)?,
            None => x,
        };
        tape.add(xs, dx)
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        String::from(name)
    } else {
        format!("{prefix}.{name}")
    }
}
