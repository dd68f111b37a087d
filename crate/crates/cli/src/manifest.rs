//! Run manifests.
//!
//! Everything that must reproduce across runs lives under `hashed`, and
//! `digest` is the SHA-256 of its compact JSON. Timing and the literal
//! command line are kept in `unhashed`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::{io, CmdResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hashed {
    pub command: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub versions: BTreeMap<String, String>,
    pub frames: usize,
    /// Output path relative to the run directory to its SHA-256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Unhashed {
    pub command_line: Vec<String>,
    pub wall_clock_seconds: f64,
    pub finished_unix_seconds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub hashed: Hashed,
    pub unhashed: Unhashed,
    pub digest: String,
}

pub fn versions() -> BTreeMap<String, String> {
    [
        ("physkit", env!("CARGO_PKG_VERSION").to_string()),
        ("pios", physkit_core::mpm::checkpoint::PIOS_VERSION.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl RunManifest {
    pub fn new(hashed: Hashed, wall_clock_seconds: f64) -> Self {
        let digest = sha256_hex(serde_json::to_string(&hashed).expect("manifest serializes").as_bytes());
        let finished_unix_seconds = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            hashed,
            unhashed: Unhashed {
                command_line: std::env::args().collect(),
                wall_clock_seconds,
                finished_unix_seconds,
            },
            digest,
        }
    }

    pub fn write(&self, path: &Path) -> CmdResult {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| io(path, e))
    }
}

/// Hashes each listed file, keyed by its path relative to `root`.
pub fn digest_files(root: &Path, files: &[std::path::PathBuf]) -> CmdResult<BTreeMap<String, String>> {
    files
        .iter()
        .map(|rel| {
            let path = root.join(rel);
            let bytes = std::fs::read(&path).map_err(|e| io(&path, e))?;
            Ok((rel.to_string_lossy().replace('\\', "/"), sha256_hex(&bytes)))
        })
        .collect()
}
