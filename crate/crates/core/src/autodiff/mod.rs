//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] is rebuilt for every forward pass. Each primitive appends one
//! node holding its value and enough context to run its vector-Jacobian
//! product; [`Tape::backward`] walks the nodes in reverse creation order,
//! which is a topological order because a node can only reference nodes
//! created before it.

mod params;
mod tape;
mod tensor;

pub use params::{kaiming_uniform, AdamConfig, ParamId, ParameterStore};
pub use tape::{ConvSpec, Gradients, Tape, Var};
pub use tensor::Tensor;
