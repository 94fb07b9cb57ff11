//! `normbank probe`: identity-bias probing with templated human rights.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use normbank::probe::{
    builtin_identities, builtin_rights, emit_bias_report, expand_probes, load_identities, load_rights, run_probe,
    BiasReport, Phrasing, ProbeRunOptions, GROUPS_FILE, MATRIX_FILE,
};
use serde::Serialize;

use super::run_recorded;
use crate::manifest::SCHEMA_VERSION;
use crate::settings::Settings;

const CHECKPOINT_FILE: &str = "checkpoint.jsonl";

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    /// current, ideal, or both
    #[arg(long, default_value = "both")]
    pub phrasing: String,
    /// Rights table (TSV); the bundled table is used when omitted
    #[arg(long)]
    pub rights: Option<PathBuf>,
    /// Identity table (TSV); the bundled table is used when omitted
    #[arg(long)]
    pub identities: Option<PathBuf>,
    /// Probes per scorer call between checkpoints
    #[arg(long, default_value_t = 512)]
    pub chunk_size: usize,
    /// Discard an existing checkpoint instead of resuming from it
    #[arg(long)]
    #[serde(skip)]
    pub fresh: bool,
    /// Output directory [default: runs/probe]
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ProbeOutput<'a> {
    schema_version: u32,
    backend: String,
    probes: usize,
    #[serde(flatten)]
    report: &'a BiasReport,
}

fn phrasings(choice: &str) -> Result<Vec<Phrasing>> {
    if choice == "both" {
        return Ok(vec![Phrasing::CurrentWorld, Phrasing::IdealWorld]);
    }
    Ok(vec![choice.parse()?])
}

pub fn run(args: &ProbeArgs, settings: &Settings) -> Result<()> {
    let phrasings = phrasings(&args.phrasing)?;
    run_recorded("probe", args.out.as_deref(), settings, args, settings.seed, |rec| {
        let rights = match &args.rights {
            Some(path) => {
                rec.input_file(path)?;
                load_rights(path)?
            }
            None => builtin_rights(),
        };
        let identities = match &args.identities {
            Some(path) => {
                rec.input_file(path)?;
                load_identities(path)?
            }
            None => builtin_identities(),
        };
        if let Some(path) = settings.backend_file() {
            rec.input_file(&path)?;
        }
        for phrasing in phrasings {
            let probes = expand_probes(&rights, &identities, phrasing)?;
            let scorer = settings.build_probe_scorer(&probes)?;
            let dir = rec.out_dir().join(phrasing.as_str());
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let checkpoint = dir.join(CHECKPOINT_FILE);
            if args.fresh && checkpoint.exists() {
                fs::remove_file(&checkpoint).with_context(|| format!("removing {}", checkpoint.display()))?;
            }
            let opts = ProbeRunOptions {
                format: settings.format,
                chunk_size: args.chunk_size,
                checkpoint: Some(checkpoint),
            };
            let report = run_probe(scorer.as_ref(), &probes, phrasing, &opts).map_err(|e| {
                anyhow::Error::new(e).context(format!(
                    "{phrasing} probe interrupted; rerun with the same --out to resume"
                ))
            })?;
            emit_bias_report(&report, &dir)?;
            let prefix = phrasing.as_str();
            rec.adopt(&format!("{prefix}/{MATRIX_FILE}"))?;
            rec.adopt(&format!("{prefix}/{GROUPS_FILE}"))?;
            rec.adopt(&format!("{prefix}/{CHECKPOINT_FILE}"))?;
            rec.write_json(
                &format!("{prefix}/report.json"),
                &ProbeOutput {
                    schema_version: SCHEMA_VERSION,
                    backend: scorer.describe(),
                    probes: probes.len(),
                    report: &report,
                },
            )?;
            println!("{report}");
        }
        Ok(())
    })
}
