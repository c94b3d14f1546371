//! Output directory bookkeeping and the `run.json` manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes files under one directory and remembers their digests.
pub struct OutputDir {
    root: PathBuf,
    pub records: Vec<OutputRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.records.push(OutputRecord {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub preset: Option<String>,
    pub config_file: Option<String>,
    /// Fully resolved configuration.
    pub config: Value,
    pub config_sha256: String,
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputRecord>,
    pub metrics: Value,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
}
