//! Seed derivation, file digests, and report plumbing shared by subcommands.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Derives a named sub-seed so every component stays reproducible in
/// isolation: `sha256(root || subcommand || purpose)`, first eight bytes.
pub fn derive_seed(root: u64, subcommand: &str, purpose: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(subcommand.as_bytes());
    hasher.update([0u8]);
    hasher.update(purpose.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 is long enough"))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Every run's auditable summary: resolved config, seed, tool version, and
/// digests of the inputs it consumed.
#[derive(Debug, Serialize)]
pub struct RunReport<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub seed: u64,
    pub config: C,
    pub inputs: BTreeMap<String, FileDigest>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl<C: Serialize> RunReport<C> {
    pub fn new(subcommand: &'static str, seed: u64, config: C) -> Self {
        Self {
            tool: "saliency",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.inputs.insert(
            name.to_string(),
            FileDigest {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
            },
        );
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Looks up an overridable knob in the optional `--config` JSON file.
pub struct FileConfig(Option<serde_json::Value>);

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self(None)),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                let value: serde_json::Value = serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?;
                Ok(Self(Some(value)))
            }
        }
    }

    /// Flag value wins; then the config file; then the built-in default.
    pub fn resolve<T: serde::de::DeserializeOwned>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> T {
        if let Some(v) = flag {
            return v;
        }
        if let Some(cfg) = &self.0 {
            if let Some(raw) = cfg.get(key) {
                if let Ok(v) = serde_json::from_value(raw.clone()) {
                    return v;
                }
            }
        }
        default
    }
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(())
}
