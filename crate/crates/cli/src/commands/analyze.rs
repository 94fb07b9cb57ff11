//! `normbank analyze`: compositional vs base partition and subsampling.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use normbank::compose::{partition_base, sample_fraction, KeywordSet};
use serde::Serialize;

use super::{read_instances, run_recorded, to_jsonl};
use crate::manifest::SCHEMA_VERSION;
use crate::settings::Settings;

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Instances, one JSON object per line (as written by `build`)
    #[arg(long)]
    pub input: PathBuf,
    /// Keyword list; the bundled list is used when omitted
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    /// Analyze a seeded sample of this fraction of the input, in (0, 1]
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Output directory [default: runs/analyze]
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Counts {
    schema_version: u32,
    keywords: usize,
    input_instances: usize,
    fraction: f64,
    analyzed: usize,
    base: usize,
    compositional: usize,
    base_share: f64,
}

pub fn run(args: &AnalyzeArgs, settings: &Settings) -> Result<()> {
    let seed = settings.seed.unwrap_or(0);
    run_recorded("analyze", args.out.as_deref(), settings, args, Some(seed), |rec| {
        rec.input_file(&args.input)?;
        let keywords = match &args.keywords {
            Some(path) => {
                rec.input_file(path)?;
                KeywordSet::load(path)?
            }
            None => KeywordSet::builtin(),
        };
        let instances = read_instances(&args.input)?;
        let input_instances = instances.len();
        let fraction = args.fraction.unwrap_or(1.0);
        let analyzed = match args.fraction {
            Some(f) => {
                let sample = sample_fraction(&instances, f, seed)?;
                rec.write("sample.jsonl", to_jsonl(&sample))?;
                sample
            }
            None => instances,
        };
        let n = analyzed.len();
        let (base, compositional) = partition_base(analyzed, &keywords);
        rec.write("base.jsonl", to_jsonl(&base))?;
        rec.write("compositional.jsonl", to_jsonl(&compositional))?;
        let counts = Counts {
            schema_version: SCHEMA_VERSION,
            keywords: keywords.len(),
            input_instances,
            fraction,
            analyzed: n,
            base: base.len(),
            compositional: compositional.len(),
            base_share: if n == 0 { 0.0 } else { base.len() as f64 / n as f64 },
        };
        rec.write_json("counts.json", &counts)?;
        println!(
            "{} instances analyzed: {} base ({:.2}%), {} compositional",
            counts.analyzed,
            counts.base,
            counts.base_share * 100.0,
            counts.compositional
        );
        Ok(())
    })
}
