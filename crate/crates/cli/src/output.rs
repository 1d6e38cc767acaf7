//! Manifests and all-or-nothing writes into the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use psnads::tdse::IntegratorStats;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::RunError;
use crate::run::{AnalysisOutcome, Metrics};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub psnads: &'static str,
    pub psnads_cli: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            psnads: psnads::VERSION,
            psnads_cli: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ScenarioConfig,
    pub files: Vec<FileEntry>,
    pub versions: Versions,
    pub wall_clock_seconds: f64,
    pub finished_unix_seconds: u64,
    pub integrator: Option<IntegratorStats>,
    pub metrics: Option<Metrics>,
    pub analyses: Vec<AnalysisOutcome>,
    /// Every analysis passed.
    pub passed: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_entries(files: &BTreeMap<String, Vec<u8>>) -> Vec<FileEntry> {
    files
        .iter()
        .map(|(path, bytes)| FileEntry {
            path: path.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        })
        .collect()
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn manifest_bytes(manifest: &RunManifest) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(manifest).expect("serializable");
    v.push(b'\n');
    v
}

fn parent_of(dir: &Path) -> PathBuf {
    match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Writes `files` and then `manifest.json` into `output_dir`. Everything is
/// first written to a sibling staging directory and only moved into place
/// once all of it is on disk.
pub fn commit(output_dir: &Path, files: &BTreeMap<String, Vec<u8>>, manifest: &[u8]) -> Result<(), RunError> {
    let parent = parent_of(output_dir);
    fs::create_dir_all(&parent)?;
    let staging = tempfile::Builder::new()
        .prefix(".psnads-staging-")
        .tempdir_in(&parent)?;
    let write = |rel: &str, bytes: &[u8]| -> Result<(), RunError> {
        let path = staging.path().join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, bytes)?;
        Ok(())
    };
    for (rel, bytes) in files {
        write(rel, bytes)?;
    }
    write("manifest.json", manifest)?;

    fs::create_dir_all(output_dir)?;
    for rel in files.keys().map(String::as_str).chain(["manifest.json"]) {
        let dest = output_dir.join(rel);
        if let Some(dir) = dest.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::rename(staging.path().join(rel), &dest)?;
    }
    Ok(())
}
