//! Per-run provenance records.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{sha256_file, write_json};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a subcommand read, wrote and was asked to do. Digests are SHA-256
/// of file bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub subcommand: String,
    pub flags: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub started_at: u64,
    pub finished_at: u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Collects manifest fields while a subcommand runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    subcommand: String,
    flags: BTreeMap<String, String>,
    inputs: Vec<PathBuf>,
    seed: Option<u64>,
    started_at: u64,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str) -> Self {
        ManifestBuilder {
            subcommand: subcommand.into(),
            flags: BTreeMap::new(),
            inputs: Vec::new(),
            seed: None,
            started_at: unix_now(),
        }
    }

    pub fn flag(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.flags.insert(key.into(), value.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.into());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    /// Hashes inputs and `outputs` and returns the finished manifest.
    pub fn finish(&self, outputs: &[&Path]) -> Result<RunManifest> {
        let digest = |paths: &mut dyn Iterator<Item = &Path>| -> Result<BTreeMap<String, String>> {
            paths.map(|p| Ok((p.display().to_string(), sha256_file(p)?))).collect()
        };
        Ok(RunManifest {
            toolkit_version: TOOLKIT_VERSION.into(),
            subcommand: self.subcommand.clone(),
            flags: self.flags.clone(),
            inputs: digest(&mut self.inputs.iter().map(PathBuf::as_path))?,
            outputs: digest(&mut outputs.iter().copied())?,
            seed: self.seed,
            started_at: self.started_at,
            finished_at: unix_now(),
        })
    }

    /// Writes the manifest to `path`.
    pub fn write(&self, path: &Path, outputs: &[&Path]) -> Result<RunManifest> {
        let manifest = self.finish(outputs)?;
        write_json(path, &manifest)?;
        Ok(manifest)
    }
}

/// `<output>.manifest.json` next to a subcommand's main output.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}
