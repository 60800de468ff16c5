//! Artifact plumbing shared by every subcommand: atomic writes, input
//! digests, and the run manifest that ties each output to its inputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

/// Writes through a temporary sibling and renames into place, so a crash
/// never leaves a truncated file under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Data(format!("not a writable path: {}", path.display())))?;
    let tmp = path.with_file_name(format!("{}.tmp", name.to_string_lossy()));
    let fail = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(fail)?;
        }
    }
    fs::write(&tmp, bytes).map_err(fail)?;
    fs::rename(&tmp, path).map_err(fail)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Everything that determined a run's numeric output: resolved
/// configuration, input digests, seeds, and the definitions in force.
/// Carries no wall-clock state, so a rerun reproduces it byte for byte.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub input_digests: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub rng_algorithm: Option<&'static str>,
    pub bins_per_decade: Option<u32>,
    pub residual_definitions: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, config: serde_json::Value) -> Self {
        Self {
            tool: "durascale",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            command_line: std::env::args().collect(),
            config,
            input_digests: BTreeMap::new(),
            seeds: Vec::new(),
            rng_algorithm: None,
            bins_per_decade: None,
            residual_definitions: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn digest_input(&mut self, path: &Path, bytes: &[u8]) {
        self.input_digests
            .insert(path.display().to_string(), sha256_hex(bytes));
    }

    /// Writes `manifest.json` into `dir`; call last, once `outputs` is
    /// complete.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        write_atomic(&dir.join("manifest.json"), body.as_bytes())
    }
}

/// Directory that should hold the manifest for an output file: its parent,
/// or the working directory when the path is bare.
pub fn manifest_dir(out_file: &Path) -> &Path {
    match out_file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}
