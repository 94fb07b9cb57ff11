mod commands;
mod manifest;
mod settings;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{analyze, build, eval, judge, probe, rerank, serve};
use settings::{GlobalArgs, Settings};

/// Build, judge, evaluate and probe descriptive-ethics QA data.
///
/// Every command writes its outputs and a manifest.json into --out
/// (default runs/<command>). Settings come from flags, then NORMBANK_*
/// environment variables, then the --config file, then defaults.
#[derive(Debug, Parser)]
#[command(name = "normbank", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest source corpora and write split .src/.tgt/.jsonl files
    Build(build::BuildArgs),
    /// Judge one situation, statement or action pair
    Judge(judge::JudgeArgs),
    /// Score predictions against gold instances
    Eval(eval::EvalArgs),
    /// Probe a backend with human-rights statements across identities
    Probe(probe::ProbeArgs),
    /// Continue a story, re-ranking candidates by moral acceptability
    Rerank(rerank::RerankArgs),
    /// Partition instances into base and compositional situations
    Analyze(analyze::AnalyzeArgs),
    /// Serve the backend over HTTP at POST /judge
    Serve(serve::ServeArgs),
}

fn run(cli: Cli) -> Result<()> {
    let settings = Settings::resolve(&cli.global)?;
    match &cli.command {
        Command::Build(a) => build::run(a, &settings),
        Command::Judge(a) => judge::run(a, &settings),
        Command::Eval(a) => eval::run(a, &settings),
        Command::Probe(a) => probe::run(a, &settings),
        Command::Rerank(a) => rerank::run(a, &settings),
        Command::Analyze(a) => analyze::run(a, &settings),
        Command::Serve(a) => serve::run(a, &settings),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
