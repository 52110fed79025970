//! Conditional implicit surface light fields.
//!
//! This crate holds everything that is pure computation: a small reverse-mode
//! autodiff engine with Adam, the field and encoder networks built on it,
//! light-field evaluation and environment compositing, an analytic
//! Blinn-Phong ray tracer that produces ground truth, pixel sampling,
//! training steps and image metrics. It builds without `std` (only `alloc`);
//! file formats, the CLI and the render service live in the `cslf` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod autodiff;
pub mod dataset;
mod error;
pub mod geom;
pub mod image;
pub mod math;
pub mod metrics;
pub mod nets;
pub mod oracle;
pub mod rng;
pub mod slf;
pub mod train;

pub use error::{Error, Result};
pub use geom::Vec3;
