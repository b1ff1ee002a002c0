use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command run. `config` is the fully resolved configuration,
/// so replaying it reproduces every numeric artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: u64, started: Instant) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            artifacts: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: started.elapsed().as_secs_f64(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Fails unless every listed artifact exists under `dir`.
pub fn check_artifacts(dir: &Path, artifacts: &[String]) -> Result<()> {
    for a in artifacts {
        let path = dir.join(a);
        anyhow::ensure!(path.exists(), "artifact {} was not written", path.display());
    }
    Ok(())
}
