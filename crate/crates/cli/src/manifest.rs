use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// What a run read, what it wrote, and with which settings.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub artifacts: Vec<FileDigest>,
    pub wall_clock_s: f64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Accumulates a manifest while a command runs.
pub struct Recorder {
    command: String,
    started: Instant,
    out: PathBuf,
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    artifacts: Vec<String>,
}

impl Recorder {
    pub fn new(command: &str, out: &Path) -> Self {
        Self {
            command: command.into(),
            started: Instant::now(),
            out: out.to_path_buf(),
            config: serde_json::Value::Null,
            seed: None,
            inputs: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn config(&mut self, value: impl Serialize) -> Result<()> {
        self.config = serde_json::to_value(value)?;
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    /// Digest an input file. Bundled case names are recorded without a digest.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let sha256 = if path.is_file() { sha256_file(path)? } else { String::new() };
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    /// Path of an artifact inside the output directory, registered for the manifest.
    pub fn artifact(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.into());
        self.out.join(name)
    }

    pub fn finish(self) -> Result<PathBuf> {
        let artifacts = self
            .artifacts
            .iter()
            .map(|name| Ok(FileDigest { path: name.clone(), sha256: sha256_file(&self.out.join(name))? }))
            .collect::<Result<Vec<_>>>()?;
        let m = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").into(),
            config: self.config,
            inputs: self.inputs,
            seed: self.seed,
            artifacts,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        let path = self.out.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
