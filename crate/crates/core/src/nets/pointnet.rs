use alloc::format;
use alloc::vec::Vec;

use super::layers::{join, Linear, ResBlock};
use crate::autodiff::{ParameterStore, Tape, Var};
use crate::rng::Rng;
use crate::Result;

/// Residual PointNet with intermediate pooling.
///
/// `fc_pos` lifts each point to `2h`; every block maps `2h -> h`, after
/// which the group max is broadcast back and concatenated to restore `2h`.
/// The last block is followed by a global max pool and a linear head.
#[derive(Debug, Clone)]
pub struct PointNet {
    fc_pos: Linear,
    blocks: Vec<ResBlock>,
    fc_out: Linear,
    pub hidden_dim: usize,
    pub out_dim: usize,
}

impl PointNet {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        hidden_dim: usize,
        blocks: usize,
        out_dim: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let h = hidden_dim;
        let fc_pos = Linear::new(store, &join(prefix, "fc_pos"), 3, 2 * h, rng)?;
        let blocks = (0..blocks.max(1))
            .map(|i| ResBlock::new(store, &join(prefix, &format!("block{i}")), 2 * h, h, rng))
            .collect::<Result<Vec<_>>>()?;
        let fc_out = Linear::new(store, &join(prefix, "fc_out"), h, out_dim, rng)?;
        Ok(PointNet {
            fc_pos,
            blocks,
            fc_out,
            hidden_dim,
            out_dim,
        })
    }

    /// `points: [groups * points_per_cloud, 3]` -> `[groups, out_dim]`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        points: Var,
        points_per_cloud: usize,
    ) -> Result<Var> {
        let mut net = self.fc_pos.forward(tape, store, points)?;
        let last = self.blocks.len() - 1;
        for (i, block) in self.blocks.iter().enumerate() {
            net = block.forward(tape, store, net)?;
            if i < last {
                let pooled = tape.max_pool_rows(net, points_per_cloud)?;
                let pooled = tape.repeat_rows(pooled, points_per_cloud)?;
                net = tape.concat(&[net, pooled])?;
            }
        }
        let pooled = tape.max_pool_rows(net, points_per_cloud)?;
        let a = tape.relu(pooled);
        self.fc_out.forward(tape, store, a)
    }
}
