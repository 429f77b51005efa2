//! Run directory: buffered CSV outputs plus a JSON manifest.
//!
//! Nothing touches the disk until [`RunDir::commit`], so a command that fails
//! before that point leaves no partial outputs behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub params: Value,
    pub results: Value,
    pub outputs: Vec<String>,
    pub version: String,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
}

pub struct RunDir {
    dir: PathBuf,
    command: String,
    inputs: Vec<PathBuf>,
    params: Value,
    files: Vec<(String, Vec<u8>)>,
    started: Instant,
    started_unix: f64,
}

impl RunDir {
    pub fn new(dir: &Path, command: &str, inputs: Vec<PathBuf>, params: impl Serialize) -> Result<Self, CliError> {
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            inputs,
            params: serde_json::to_value(params)?,
            files: Vec::new(),
            started: Instant::now(),
            started_unix,
        })
    }

    /// Buffers one output file, produced by a writer callback.
    pub fn add<F>(&mut self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> gmrank::Result<()>,
    {
        let mut buf = Vec::new();
        write(&mut buf).map_err(|source| CliError::Core {
            context: format!("writing {name}"),
            source,
        })?;
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    /// Creates the directory and writes every buffered file and the manifest.
    pub fn commit(self, results: impl Serialize) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::io(path, e))?;
        }
        let manifest = RunManifest {
            command: self.command,
            inputs: self.inputs,
            params: self.params,
            results: serde_json::to_value(results)?,
            outputs: self.files.iter().map(|(n, _)| n.clone()).collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}
