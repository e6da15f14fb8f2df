//! Run manifest: scenario hash, stage log and checksummed file inventory.

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct StageEntry {
    pub name: String,
    pub status: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario_hash: String,
    pub version: String,
    pub seed: u64,
    pub wall_clock_s: f64,
    pub stages: Vec<StageEntry>,
    pub files: Vec<FileEntry>,
}

pub struct ManifestBuilder {
    command: String,
    scenario_hash: String,
    seed: u64,
    start: Instant,
    stages: Vec<StageEntry>,
    files: Vec<PathBuf>,
    out_dir: PathBuf,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    format!("{:x}", hasher.finalize())
}

impl ManifestBuilder {
    pub fn new(command: &str, scenario_json: &str, seed: u64, out_dir: &Path) -> Self {
        Self {
            command: command.to_string(),
            scenario_hash: sha256_hex(scenario_json.as_bytes()),
            seed,
            start: Instant::now(),
            stages: Vec::new(),
            files: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn stage(&mut self, name: &str, status: &str) {
        self.stages.push(StageEntry { name: name.to_string(), status: status.to_string() });
    }

    pub fn file(&mut self, path: &Path) {
        self.files.push(path.to_path_buf());
    }

    pub fn write(self) -> Result<RunManifest> {
        let mut files = Vec::new();
        for p in &self.files {
            let data = std::fs::read(p)?;
            let rel = p.strip_prefix(&self.out_dir).unwrap_or(p);
            files.push(FileEntry {
                path: rel.display().to_string(),
                sha256: sha256_hex(&data),
                bytes: data.len() as u64,
            });
        }
        let manifest = RunManifest {
            command: self.command,
            scenario_hash: self.scenario_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            wall_clock_s: self.start.elapsed().as_secs_f64(),
            stages: self.stages,
            files,
        };
        let path = self.out_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }
}
