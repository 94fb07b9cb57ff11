//! Run manifests and output bookkeeping.
//!
//! Every command writes its files through a [`RunRecorder`], which hashes
//! them and finally writes `manifest.json` next to them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use normbank::seed::sha256_hex;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    /// SHA-256 of `config`.
    pub config_hash: String,
    /// Resolved settings and command arguments.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Input name to SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
    /// Path relative to the output directory to SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: Option<String>,
}

pub struct RunRecorder {
    out_dir: PathBuf,
    manifest: RunManifest,
    written: Vec<PathBuf>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunRecorder {
    pub fn start(command: &str, out_dir: &Path, config: serde_json::Value, seed: Option<u64>) -> Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating output directory {}", out_dir.display()))?;
        let config_hash = sha256_hex(serde_json::to_vec(&config).expect("config serializes"));
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            manifest: RunManifest {
                schema_version: SCHEMA_VERSION,
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash,
                config,
                seed,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                started_at: now(),
                finished_at: None,
            },
            written: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Records the hash of an input file.
    pub fn input_file(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest
            .inputs
            .insert(path.display().to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Records the hash of an input given inline, such as a query text.
    pub fn input_value(&mut self, name: &str, value: &str) {
        self.manifest.inputs.insert(name.to_string(), sha256_hex(value));
    }

    /// Writes `bytes` to `rel` under the output directory.
    pub fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.out_dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        self.written.push(path.clone());
        fs::write(&path, bytes.as_ref()).with_context(|| format!("writing {}", path.display()))?;
        self.manifest
            .outputs
            .insert(rel.to_string(), sha256_hex(bytes.as_ref()));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(rel, text)
    }

    /// Records a file that something else wrote under the output directory.
    pub fn adopt(&mut self, rel: &str) -> Result<()> {
        let path = self.out_dir.join(rel);
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        self.written.push(path);
        self.manifest.outputs.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Writes `manifest.json` without closing the run.
    pub fn checkpoint(&self) -> Result<()> {
        self.write_manifest(&self.manifest)
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.finished_at = Some(now());
        self.write_manifest(&self.manifest)?;
        Ok(self.manifest)
    }

    /// Removes every output written so far.
    pub fn discard(self) {
        for path in &self.written {
            if let Err(e) = fs::remove_file(path) {
                if e.kind() != std::io::ErrorKind::NotFound {
                    log::warn!("could not remove partial output {}: {e}", path.display());
                }
            }
        }
    }

    fn write_manifest(&self, manifest: &RunManifest) -> Result<()> {
        let path = self.out_dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
