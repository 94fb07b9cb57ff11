pub mod analyze;
pub mod build;
pub mod eval;
pub mod judge;
pub mod probe;
pub mod rerank;
pub mod serve;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use normbank::QAInstance;
use serde::Serialize;

use crate::manifest::RunRecorder;
use crate::settings::Settings;

pub fn default_out(command: &str) -> PathBuf {
    PathBuf::from("runs").join(command)
}

/// Runs `body` with a recorder for `out`; on failure every output written so
/// far is removed and no manifest is left behind.
pub fn run_recorded<A: Serialize>(
    command: &str,
    out: Option<&Path>,
    settings: &Settings,
    args: &A,
    seed: Option<u64>,
    body: impl FnOnce(&mut RunRecorder) -> Result<()>,
) -> Result<()> {
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| default_out(command));
    let config = serde_json::json!({ "settings": settings, "args": args });
    let mut rec = RunRecorder::start(command, &out, config, seed)?;
    match body(&mut rec) {
        Ok(()) => {
            rec.finish()?;
            Ok(())
        }
        Err(e) => {
            rec.discard();
            Err(e)
        }
    }
}

/// Reads one JSON instance per non-blank line.
pub fn read_instances(path: &Path) -> Result<Vec<QAInstance>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).with_context(|| format!("{} line {}: not an instance", path.display(), i + 1))
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("item serializes"));
        out.push('\n');
    }
    out
}
