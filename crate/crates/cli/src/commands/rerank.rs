//! `normbank rerank`: story continuation chosen by moral acceptability.

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::Args;
use normbank::rerank::{
    generate_story, CandidateGenerator, CommandGenerator, HttpGenerator, RerankConfig, ScriptedGenerator, Story,
};
use serde::Serialize;

use super::run_recorded;
use crate::manifest::SCHEMA_VERSION;
use crate::settings::Settings;

#[derive(Debug, Clone, Args, Serialize)]
pub struct RerankArgs {
    /// First sentence of the story
    #[arg(long)]
    pub prompt: String,
    /// Candidate source: script:PATH (JSON), cmd:SHELL-COMMAND or http:URL
    #[arg(long)]
    pub generator: String,
    /// Sentences to add after the prompt
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
    /// Candidates requested per step
    #[arg(long, default_value_t = 5)]
    pub candidates: usize,
    /// Scores at or above this are treated as ties and sampled from
    #[arg(long, default_value_t = 0.999)]
    pub tie_threshold: f64,
    /// Output directory [default: runs/rerank]
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RerankOutput<'a> {
    schema_version: u32,
    generator: String,
    backend: String,
    seed: u64,
    #[serde(flatten)]
    story: &'a Story,
}

fn build_generator(spec: &str, settings: &Settings) -> Result<Box<dyn CandidateGenerator>> {
    if let Some(path) = spec.strip_prefix("script:") {
        return Ok(Box::new(ScriptedGenerator::load(Path::new(path))?));
    }
    if let Some(command) = spec.strip_prefix("cmd:") {
        return Ok(Box::new(CommandGenerator::new(command)));
    }
    if let Some(url) = spec.strip_prefix("http:") {
        return Ok(Box::new(HttpGenerator::new(url, settings.timeout())?));
    }
    bail!("unknown generator `{spec}` (expected script:PATH, cmd:COMMAND or http:URL)")
}

pub fn run(args: &RerankArgs, settings: &Settings) -> Result<()> {
    let seed = settings.seed.unwrap_or(0);
    let cfg = RerankConfig {
        candidates_per_step: args.candidates,
        steps: args.steps,
        tie_threshold: args.tie_threshold,
        rng_seed: seed,
        format: settings.format,
    };
    cfg.validate()?;
    let generator = build_generator(&args.generator, settings)?;
    let scorer = settings.build_scorer()?;
    run_recorded("rerank", args.out.as_deref(), settings, args, Some(seed), |rec| {
        if let Some(path) = args.generator.strip_prefix("script:") {
            rec.input_file(Path::new(path))?;
        }
        if let Some(path) = settings.backend_file() {
            rec.input_file(&path)?;
        }
        let story = generate_story(&args.prompt, generator.as_ref(), scorer.as_ref(), &cfg)?;
        let text = story.text();
        rec.write("story.txt", format!("{text}\n"))?;
        rec.write_json(
            "story.json",
            &RerankOutput {
                schema_version: SCHEMA_VERSION,
                generator: generator.describe(),
                backend: scorer.describe(),
                seed,
                story: &story,
            },
        )?;
        println!("{text}");
        Ok(())
    })
}
