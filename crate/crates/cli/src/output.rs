//! Staging and publishing of scenario artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// A pass/fail check computed by a scenario.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, detail: detail.into() }
    }
}

/// In-memory result of one scenario.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        self.add(name, bytes);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    path: &'a str,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    kind: &'a str,
    seed: u64,
    scenario_sha256: String,
    artifacts: Vec<ManifestEntry<'a>>,
    checks: &'a [Check],
    warnings: &'a [String],
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Fails if `dir` exists and is not an empty directory.
pub fn ensure_free(dir: &Path) -> Result<(), String> {
    match fs::read_dir(dir) {
        Ok(mut entries) => {
            if entries.next().is_some() {
                Err(format!("output directory {} already exists and is not empty", dir.display()))
            } else {
                Ok(())
            }
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
        Err(e) if dir.exists() => Err(format!("output path {} is not a usable directory: {e}", dir.display())),
        Err(e) => Err(format!("cannot inspect {}: {e}", dir.display())),
    }
}

/// Writes every artifact and the manifest into a staging directory next to
/// `dir`, then renames it into place, so `dir` either holds the complete set
/// or is left untouched.
pub fn publish(dir: &Path, artifacts: &Artifacts, kind: &str, seed: u64, scenario_text: &str) -> Result<(), String> {
    ensure_free(dir)?;
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
    let result = write_all(&staging, artifacts, kind, seed, scenario_text).and_then(|()| {
        if dir.exists() {
            fs::remove_dir(dir).map_err(|e| format!("cannot replace empty {}: {e}", dir.display()))?;
        }
        fs::rename(&staging, dir).map_err(|e| format!("cannot move results into {}: {e}", dir.display()))
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

fn write_all(staging: &PathBuf, artifacts: &Artifacts, kind: &str, seed: u64, scenario_text: &str) -> Result<(), String> {
    fs::create_dir(staging).map_err(|e| format!("cannot create {}: {e}", staging.display()))?;
    let mut entries = Vec::with_capacity(artifacts.files.len());
    for (path, bytes) in &artifacts.files {
        fs::write(staging.join(path), bytes).map_err(|e| format!("cannot write {path}: {e}"))?;
        entries.push(ManifestEntry { path, bytes: bytes.len(), sha256: sha256_hex(bytes) });
    }
    let manifest = Manifest {
        kind,
        seed,
        scenario_sha256: sha256_hex(scenario_text.as_bytes()),
        artifacts: entries,
        checks: &artifacts.checks,
        warnings: &artifacts.warnings,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
    bytes.push(b'\n');
    fs::write(staging.join(MANIFEST), bytes).map_err(|e| format!("cannot write manifest: {e}"))
}
