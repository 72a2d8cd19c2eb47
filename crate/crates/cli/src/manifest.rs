use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Sidecar written next to every output directory: enough to rerun the
/// command and get the same bytes back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub argv: Vec<String>,
    /// SHA-256 of the fully resolved configuration.
    pub config_digest: String,
    pub seed: u64,
    pub versions: Versions,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub qecforge: String,
    pub manifest_schema: u32,
}

impl RunManifest {
    pub fn new(command: &str, config: &str, seed: u64) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            argv: std::env::args().collect(),
            config_digest: hex::encode(Sha256::digest(config.as_bytes())),
            seed,
            versions: Versions {
                qecforge: env!("CARGO_PKG_VERSION").to_string(),
                manifest_schema: SCHEMA_VERSION,
            },
            outputs: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn finish(mut self, dir: &Path, outputs: Vec<PathBuf>, elapsed: Duration) -> std::io::Result<PathBuf> {
        self.outputs = outputs;
        self.wall_time_s = elapsed.as_secs_f64();
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self).expect("manifests always serialize");
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
