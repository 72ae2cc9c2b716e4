use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::report::write_json;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command run, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// The configuration as used, overrides applied.
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Files written by the run, relative to the output directory. The
    /// manifest itself is not listed.
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        write_json(&out_dir.join(MANIFEST_FILE), self)
    }
}
