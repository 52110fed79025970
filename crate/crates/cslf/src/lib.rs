//! File formats, the command line and the HTTP render service for
//! conditional implicit surface light fields. All computation lives in
//! `cslf-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
mod error;
pub mod files;
pub mod manifest;
pub mod render;
pub mod server;
pub mod store;

pub use error::{Error, Result};
