use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::commands::CommandSpec;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command run, sufficient to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: CommandSpec,
    pub seed: Option<u64>,
    /// SHA-256 of the input (the data file, or the concatenated bundle files).
    pub input_sha256: Option<String>,
    /// Files written next to this manifest.
    pub artifacts: Vec<String>,
    pub started_unix_secs: u64,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: CommandSpec, input_sha256: Option<String>, started: SystemTime, elapsed: Duration) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: command.seed(),
            command,
            input_sha256,
            artifacts: Vec::new(),
            started_unix_secs: started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            duration_secs: elapsed.as_secs_f64(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of several files, in the order given, each prefixed by its name.
pub fn sha256_files(dir: &Path, names: &[&str]) -> Result<String> {
    let mut hasher = Sha256::new();
    for name in names {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        hasher.update(name.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}
