use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::layers::{join, Linear, ResBlock};
use crate::autodiff::{ParameterStore, Tape, Var};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    /// Unbounded output (appearance features).
    Identity,
    /// Colors in `[0, 1]`.
    Sigmoid,
}

/// Shape of a conditioned fully-connected residual network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldNetSpec {
    pub in_dim: usize,
    pub hidden_dim: usize,
    /// Width of the concatenated conditioning vector; 0 disables conditioning.
    pub cond_dim: usize,
    pub blocks: usize,
    pub out_dim: usize,
    pub output: OutputActivation,
}

/// Residual MLP where a linear projection of the conditioning vector is
/// added to the output of every block.
///
/// Inputs are laid out as `groups × rows_per_group` rows; each group shares
/// one conditioning row, so the projections cost `groups` rows, not all of
/// them.
#[derive(Debug, Clone)]
pub struct FieldNet {
    spec: FieldNetSpec,
    fc_in: Linear,
    blocks: Vec<ResBlock>,
    cond: Vec<Linear>,
    fc_out: Linear,
}

impl FieldNet {
    pub fn new(store: &mut ParameterStore, prefix: &str, spec: FieldNetSpec, rng: &mut Rng) -> Result<Self> {
        if spec.hidden_dim == 0 || spec.in_dim == 0 || spec.out_dim == 0 {
            return Err(Error::InvalidInput(format!("degenerate field network {spec:?}")));
        }
        let h = spec.hidden_dim;
        let fc_in = Linear::new(store, &join(prefix, "fc_in"), spec.in_dim, h, rng)?;
        let mut blocks = Vec::with_capacity(spec.blocks);
        let mut cond = Vec::new();
        for i in 0..spec.blocks {
            blocks.push(ResBlock::new(store, &join(prefix, &format!("block{i}")), h, h, rng)?);
            if spec.cond_dim > 0 {
                // conditioning starts switched off, like the residual branches
                cond.push(Linear::zeroed(store, &join(prefix, &format!("cond{i}")), spec.cond_dim, h)?);
            }
        }
        let fc_out = Linear::new(store, &join(prefix, "fc_out"), h, spec.out_dim, rng)?;
        Ok(FieldNet {
            spec,
            fc_in,
            blocks,
            cond,
            fc_out,
        })
    }

    pub fn spec(&self) -> &FieldNetSpec {
        &self.spec
    }

    pub fn output_layer(&self) -> &Linear {
        &self.fc_out
    }

    /// `x: [groups * rows_per_group, in_dim]`, `cond: [groups, cond_dim]`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        x: Var,
        cond: Option<Var>,
        rows_per_group: usize,
    ) -> Result<Var> {
        let xs = tape.shape(x);
        if xs.len() != 2 || xs[1] != self.spec.in_dim {
            return Err(Error::ShapeMismatch {
                op: "field input",
                lhs: xs.to_vec(),
                rhs: alloc::vec![self.spec.in_dim],
            });
        }
        let rows = xs[0];
        match (cond, self.spec.cond_dim) {
            (None, 0) => {}
            (Some(c), d) if d > 0 => {
                let cs = tape.shape(c);
                if cs.len() != 2 || cs[1] != d || cs[0] * rows_per_group != rows {
                    return Err(Error::ShapeMismatch {
                        op: "field conditioning",
                        lhs: cs.to_vec(),
                        rhs: alloc::vec![rows / rows_per_group.max(1), d],
                    });
                }
            }
            (c, d) => {
                return Err(Error::InvalidInput(format!(
                    "field network has conditioning width {d} but conditioning {} given",
                    if c.is_some() { "was" } else { "was not" }
                )))
            }
        }
        let mut net = self.fc_in.forward(tape, store, x)?;
        for (i, block) in self.blocks.iter().enumerate() {
            net = block.forward(tape, store, net)?;
            if let Some(c) = cond {
                let proj = self.cond[i].forward(tape, store, c)?;
                let proj = if rows_per_group == 1 {
                    proj
                } else {
                    tape.repeat_rows(proj, rows_per_group)?
                };
                net = tape.add(net, proj)?;
            }
        }
        let a = tape.relu(net);
        let out = self.fc_out.forward(tape, store, a)?;
        Ok(match self.spec.output {
            OutputActivation::Identity => out,
            OutputActivation::Sigmoid => tape.sigmoid(out),
        })
    }
}
