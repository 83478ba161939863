use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ScenarioConfig;
use super::episode::HarnessError;

/// Writes CSV files and a JSON run record into one directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    package: &'a str,
    version: &'a str,
    config_hash: String,
    seeds: &'a [u64],
    outputs: &'a [String],
    config: &'a ScenarioConfig,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, HarnessError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| HarnessError::Io { path: root.clone(), source })?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write `rows` with a header derived from the row type.
    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), HarnessError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|source| HarnessError::Io { path, source })?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), HarnessError> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|source| HarnessError::Io { path, source })?;
        self.written.push(name.to_owned());
        Ok(())
    }

    /// Record the command, config and seeds behind everything written so far.
    pub fn manifest(&mut self, command: &str, cfg: &ScenarioConfig, seeds: &[u64]) -> Result<(), HarnessError> {
        let m = Manifest {
            command,
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            seeds,
            outputs: &self.written,
            config: cfg,
        };
        let json = serde_json::to_string_pretty(&m).expect("manifest serializes");
        let path = self.path("manifest.json");
        fs::write(&path, json + "\n").map_err(|source| HarnessError::Io { path, source })
    }
}
