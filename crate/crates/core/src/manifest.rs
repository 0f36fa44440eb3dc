//! Run manifests: a provenance record written next to every artifact
//! set. Holds content digests, seeds, and detector tags only; no
//! timestamps, so repeated runs on identical inputs produce identical
//! manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_sha256: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub seeds: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detector_tags: Vec<String>,
    /// Relative path -> sha256 of consumed files.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, String>,
    /// Relative path -> sha256 of produced files.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn new(subcommand: &str, config_text: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            seeds: BTreeMap::new(),
            detector_tags: Vec::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.inputs.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, name: &str, path: &Path) -> Result<()> {
        self.outputs.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Write `manifest.json` into the stage directory.
    pub fn save(&self, stage_dir: &Path) -> Result<PathBuf> {
        let path = stage_dir.join(MANIFEST_NAME);
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(stage_dir: &Path) -> Result<RunManifest> {
        let path = stage_dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Require an upstream artifact, naming the producing subcommand in the
/// error so the user knows what to run first.
pub fn require_artifact(path: &Path, producing_subcommand: &str) -> Result<()> {
    if path.exists() {
        return Ok(());
    }
    Err(Error::MissingArtifact {
        path: path.to_path_buf(),
        hint: format!("tagnet {producing_subcommand}"),
    })
}

/// Compare the current config hash against an upstream stage's manifest.
/// `Ok(Some(warning))` means a mismatch that `--force` may override.
pub fn check_config_consistency(
    stage_dir: &Path,
    config_text: &str,
) -> Result<Option<String>> {
    if !stage_dir.join(MANIFEST_NAME).exists() {
        return Ok(None);
    }
    let manifest = RunManifest::load(stage_dir)?;
    let current = sha256_hex(config_text.as_bytes());
    if manifest.config_sha256 == current {
        return Ok(None);
    }
    Ok(Some(format!(
        "config hash {current} differs from the one recorded by `{}` ({}); \
         rerun the upstream stage or pass --force",
        manifest.subcommand, manifest.config_sha256
    )))
}
