//! Output directory bookkeeping: every file written is hashed into the manifest.

use crate::CliError;
use hj_inverse::Grid;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Serialize)]
pub struct GridSummary {
    pub bounds: Vec<(f64, f64)>,
    pub res: Vec<usize>,
}

impl From<&Grid> for GridSummary {
    fn from(g: &Grid) -> Self {
        GridSummary { bounds: g.bounds(), res: g.shape()[..g.dim()].to_vec() }
    }
}

#[derive(Serialize)]
pub struct Check {
    pub name: String,
    pub expected: Value,
    pub measured: Value,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub source: String,
    pub hamiltonian: Value,
    pub horizon: f64,
    pub region_of_interest: Option<GridSummary>,
    pub computational_grid: Option<GridSummary>,
    pub margin_cells: Vec<usize>,
    pub tolerances: serde_json::Map<String, Value>,
    pub timings_ms: serde_json::Map<String, Value>,
    pub results: serde_json::Map<String, Value>,
    pub checks: Vec<Check>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects files under one directory and writes `MANIFEST.json` last.
pub struct OutputDir {
    root: PathBuf,
    pub manifest: Manifest,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: &Path, manifest: Manifest) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf(), manifest, started: Instant::now() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let p = self.root.join(name);
        fs::write(&p, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
        self.manifest.files.push(FileEntry { path: name.into(), sha256: sha256_hex(contents.as_bytes()), bytes: contents.len() });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &impl Serialize) -> Result<(), CliError> {
        let s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
        self.write(name, &(s + "\n"))
    }

    /// Records the time since the previous lap under `key`.
    pub fn lap(&mut self, key: &str) {
        let ms = self.started.elapsed().as_secs_f64() * 1e3;
        self.manifest.timings_ms.insert(key.into(), Value::from(ms));
        self.started = Instant::now();
    }

    pub fn finish(self, name: &str) -> Result<Manifest, CliError> {
        let p = self.root.join(name);
        let s = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&p, s + "\n").map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_input() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
