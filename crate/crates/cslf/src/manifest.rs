use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::store::write_json;
use crate::Result;

/// Record of one command invocation: the fully resolved arguments, enough to
/// repeat the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, args: serde_json::Value) -> Self {
        RunManifest {
            tool: String::from(env!("CARGO_PKG_NAME")),
            version: String::from(env!("CARGO_PKG_VERSION")),
            command: String::from(command),
            args,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// `out.png` records to `out.png.run.json`; directories to `dir/run.json`.
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("run.json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".run.json");
        PathBuf::from(s)
    }
}
