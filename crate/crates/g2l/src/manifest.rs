//! Run manifests: enough to rerun a command exactly, written next to its outputs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub g2l: &'static str,
    pub dataset_format: &'static str,
    pub checkpoint_format: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Versions {
            g2l: env!("CARGO_PKG_VERSION"),
            dataset_format: "G2LD1",
            checkpoint_format: "G2LE1",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Every flag value the command ran with, defaults included.
    pub config: serde_json::Value,
    pub seed: u64,
    pub versions: Versions,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn start(command: &str, config: serde_json::Value, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            seed,
            versions: Versions::default(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: unix_now(),
            finished: 0.0,
        }
    }

    pub fn finish_and_write(mut self, path: &Path) -> Result<()> {
        self.finished = unix_now();
        let mut bytes = serde_json::to_vec_pretty(&self)?;
        bytes.push(b'\n');
        crate::write_atomic(path, &bytes)
    }
}

/// `data.g2ld` gets `data.g2ld.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
