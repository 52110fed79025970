//! `.cslf` checkpoints: a little-endian `u64` header length, a UTF-8 JSON
//! header ending in a newline, then every parameter as a little-endian `f64`
//! in store order.

use std::path::Path;

use cslf_core::dataset::DatasetPreset;
use cslf_core::nets::{CslfModel, ModelArch};
use cslf_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::files;
use crate::{Error, Result};

pub const FORMAT: &str = "cslf-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub arch: ModelArch,
    /// Training run that produced the weights, if any.
    pub train: Option<TrainConfig>,
    pub steps: usize,
    /// Recipe of the training data; fixes the render resolution and the
    /// reference views used for image codes.
    pub dataset: Option<DatasetPreset>,
    pub parameters: Vec<ParamEntry>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: Header,
    pub model: CslfModel,
}

impl Checkpoint {
    pub fn new(model: CslfModel, train: Option<TrainConfig>, steps: usize, dataset: Option<DatasetPreset>) -> Self {
        let parameters = model
            .store()
            .layout()
            .into_iter()
            .map(|(name, shape)| ParamEntry { name, shape })
            .collect();
        Checkpoint {
            header: Header {
                format: String::from(FORMAT),
                version: VERSION,
                arch: model.arch().clone(),
                train,
                steps,
                dataset,
                parameters,
            },
            model,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut json = serde_json::to_string(&self.header).map_err(|e| Error::Internal(e.to_string()))?;
        json.push('\n');
        let flat = self.model.store().flatten();
        let mut out = Vec::with_capacity(8 + json.len() + 8 * flat.len());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(json.as_bytes());
        for v in flat {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    /// Parses checkpoint bytes; `path` only labels errors.
    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::format(path, m);
        let len = bytes
            .get(..8)
            .map(|b| u64::from_le_bytes(b.try_into().expect("8-byte slice")))
            .ok_or_else(|| bad(String::from("truncated checkpoint: no header length")))?;
        let end = usize::try_from(len)
            .ok()
            .and_then(|l| l.checked_add(8))
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad(format!("truncated checkpoint: header of {len} bytes")))?;
        let text = std::str::from_utf8(&bytes[8..end]).map_err(|e| bad(format!("header is not UTF-8: {e}")))?;
        let text = text
            .strip_suffix('\n')
            .ok_or_else(|| bad(String::from("header is not newline-terminated")))?;
        let probe: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(format!("header: {e}")))?;
        if probe.get("format").and_then(|f| f.as_str()) != Some(FORMAT) {
            return Err(bad(String::from("not a cslf checkpoint")));
        }
        match probe.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(VERSION) => {}
            v => return Err(bad(format!("checkpoint version {v:?} is not supported (expected {VERSION})"))),
        }
        let header: Header = serde_json::from_value(probe).map_err(|e| bad(format!("header: {e}")))?;
        let blob = &bytes[end..];
        let mut model = CslfModel::new(header.arch.clone(), 0).map_err(|e| bad(e.to_string()))?;
        let layout: Vec<ParamEntry> = model
            .store()
            .layout()
            .into_iter()
            .map(|(name, shape)| ParamEntry { name, shape })
            .collect();
        if layout != header.parameters {
            return Err(bad(String::from("parameter layout does not match the architecture")));
        }
        let n = model.store().num_scalars();
        if blob.len() != 8 * n {
            let what = if blob.len() < 8 * n { "truncated" } else { "oversized" };
            return Err(bad(format!("{what} parameter blob: {} bytes for {n} values", blob.len())));
        }
        let flat: Vec<f64> = blob
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        model.store_mut().load_flat(&flat).map_err(|e| bad(e.to_string()))?;
        Ok(Checkpoint { header, model })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        files::write_bytes(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Checkpoint::from_bytes(path, &files::read_bytes(path)?)
    }
}
