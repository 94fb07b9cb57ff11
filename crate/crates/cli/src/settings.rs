//! Run settings shared by every subcommand.
//!
//! Each value is taken from the first of: command-line flag, `NORMBANK_*`
//! environment variable, the `--config` TOML file, built-in default.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use normbank::probe::{OracleScorer, RightsProbe};
use normbank::scorer::{BackendSpec, RemoteConfig};
use normbank::serialize::WireFormat;
use normbank::Scorer;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML file with default run settings [env: NORMBANK_CONFIG]
    #[arg(long, global = true, env = "NORMBANK_CONFIG", hide_env = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice [env: NORMBANK_SEED]
    #[arg(long, global = true, env = "NORMBANK_SEED", hide_env = true)]
    pub seed: Option<u64>,
    /// Wire format: classic or plus [env: NORMBANK_FORMAT] [default: classic]
    #[arg(long, global = true, env = "NORMBANK_FORMAT", hide_env = true)]
    pub format: Option<WireFormat>,
    /// lexicon, remote, remote:URL, table:PATH, or oracle (probe only)
    /// [env: NORMBANK_BACKEND] [default: lexicon]
    #[arg(long, global = true, env = "NORMBANK_BACKEND", hide_env = true)]
    pub backend: Option<String>,
    /// Judgment server URL; replaces the URL of a remote backend
    /// [env: NORMBANK_ENDPOINT]
    #[arg(long, global = true, env = "NORMBANK_ENDPOINT", hide_env = true)]
    pub endpoint: Option<String>,
    /// Remote requests in flight [env: NORMBANK_CONCURRENCY] [default: 4]
    #[arg(long, global = true, env = "NORMBANK_CONCURRENCY", hide_env = true)]
    pub concurrency: Option<usize>,
    /// Inputs per remote request [env: NORMBANK_BATCH_SIZE] [default: 16]
    #[arg(long, global = true, env = "NORMBANK_BATCH_SIZE", hide_env = true)]
    pub batch_size: Option<usize>,
    /// Per-request timeout in seconds [env: NORMBANK_TIMEOUT] [default: 30]
    #[arg(long, global = true, env = "NORMBANK_TIMEOUT", hide_env = true)]
    pub timeout: Option<f64>,
    /// Retries per failed remote request [env: NORMBANK_RETRIES] [default: 3]
    #[arg(long, global = true, env = "NORMBANK_RETRIES", hide_env = true)]
    pub retries: Option<u32>,
    /// Skip and count bad source records instead of aborting
    /// [env: NORMBANK_LENIENT=true]
    #[arg(long, global = true)]
    pub lenient: bool,
}

/// Contents of a `--config` file; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSettings {
    seed: Option<u64>,
    format: Option<WireFormat>,
    backend: Option<String>,
    endpoint: Option<String>,
    concurrency: Option<usize>,
    batch_size: Option<usize>,
    timeout: Option<f64>,
    retries: Option<u32>,
    lenient: Option<bool>,
}

/// Fully resolved settings, recorded in every run manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    /// `None` lets the command pick its own default.
    pub seed: Option<u64>,
    pub format: WireFormat,
    pub backend: String,
    pub endpoint: Option<String>,
    pub concurrency: usize,
    pub batch_size: usize,
    pub timeout_secs: f64,
    pub retries: u32,
    pub lenient: bool,
}

fn env_flag(name: &str) -> Option<bool> {
    let value = std::env::var(name).ok()?;
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" | "" => Some(false),
        _ => None,
    }
}

impl Settings {
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => FileSettings::default(),
        };
        let defaults = RemoteConfig::default();
        let settings = Settings {
            seed: args.seed.or(file.seed),
            format: args.format.or(file.format).unwrap_or(WireFormat::Classic),
            backend: args
                .backend
                .clone()
                .or(file.backend)
                .unwrap_or_else(|| "lexicon".into()),
            endpoint: args.endpoint.clone().or(file.endpoint),
            concurrency: args.concurrency.or(file.concurrency).unwrap_or(defaults.concurrency),
            batch_size: args.batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
            timeout_secs: args.timeout.or(file.timeout).unwrap_or(defaults.timeout.as_secs_f64()),
            retries: args.retries.or(file.retries).unwrap_or(defaults.retries),
            lenient: args.lenient || env_flag("NORMBANK_LENIENT").or(file.lenient).unwrap_or(false),
        };
        if settings.concurrency == 0 || settings.batch_size == 0 {
            bail!("--concurrency and --batch-size must be at least 1");
        }
        if !(settings.timeout_secs.is_finite() && settings.timeout_secs > 0.0) {
            bail!("--timeout must be a positive number of seconds");
        }
        Ok(settings)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn remote_config(&self) -> RemoteConfig {
        RemoteConfig {
            endpoint: self.endpoint.clone().unwrap_or_default(),
            format: self.format,
            batch_size: self.batch_size,
            concurrency: self.concurrency,
            timeout: self.timeout(),
            retries: self.retries,
            ..RemoteConfig::default()
        }
    }

    fn backend_spec(&self) -> Result<BackendSpec> {
        if self.backend == "remote" {
            let Some(url) = &self.endpoint else {
                bail!("backend `remote` needs --endpoint or NORMBANK_ENDPOINT");
            };
            return Ok(BackendSpec::Remote(url.clone()));
        }
        let spec: BackendSpec = self.backend.parse()?;
        Ok(match (spec, &self.endpoint) {
            (BackendSpec::Remote(_), Some(url)) => BackendSpec::Remote(url.clone()),
            (spec, _) => spec,
        })
    }

    /// File read by a `table:PATH` backend, for the manifest.
    pub fn backend_file(&self) -> Option<PathBuf> {
        self.backend.strip_prefix("table:").map(PathBuf::from)
    }

    pub fn build_scorer(&self) -> Result<Box<dyn Scorer>> {
        if self.backend == "oracle" {
            bail!("the oracle backend is only available to `probe`");
        }
        let spec = self.backend_spec()?;
        spec.build(self.remote_config())
            .with_context(|| format!("setting up backend `{}`", self.backend))
    }

    /// Like [`Settings::build_scorer`], plus the oracle that answers every
    /// probe correctly.
    pub fn build_probe_scorer(&self, probes: &[RightsProbe]) -> Result<Box<dyn Scorer>> {
        if self.backend == "oracle" {
            return Ok(Box::new(OracleScorer::new(probes, self.format)));
        }
        self.build_scorer()
    }
}

fn load_file(path: &Path) -> Result<FileSettings> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}
