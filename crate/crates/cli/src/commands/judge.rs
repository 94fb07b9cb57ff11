//! `normbank judge`: one query through the configured backend.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use normbank::serialize::encode_query;
use normbank::{Mode, Query, Verdict};
use serde::Serialize;

use super::run_recorded;
use crate::manifest::SCHEMA_VERSION;
use crate::settings::Settings;

#[derive(Debug, Clone, Args, Serialize)]
pub struct JudgeArgs {
    /// Situation, statement, or first action in relative mode
    pub text: String,
    /// Second action (relative mode only)
    #[arg(long)]
    pub second: Option<String>,
    /// free_form, yes_no or relative
    #[arg(long, default_value = "free_form")]
    pub mode: Mode,
    /// Output directory [default: runs/judge]
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct JudgeOutput<'a> {
    schema_version: u32,
    backend: String,
    mode: Mode,
    input: &'a str,
    class: &'static str,
    text: Option<&'a str>,
    class_scores: BTreeMap<&'static str, f64>,
}

pub fn query_for(text: &str, second: Option<&str>, mode: Mode) -> Result<Query> {
    match (mode, second) {
        (Mode::Relative, Some(second)) => Ok(Query::pair(text, second)),
        (Mode::Relative, None) => bail!("relative mode needs --second"),
        (_, Some(_)) => bail!("--second is only valid in relative mode"),
        (_, None) => Ok(Query::single(text)),
    }
}

pub fn render_verdict(v: &Verdict) -> String {
    let mut out = format!("class: {}\n", v.chosen);
    if let Some(text) = &v.text_judgment {
        out.push_str(&format!("judgment: {text}\n"));
    }
    let scores: Vec<String> = v
        .class_scores
        .iter()
        .map(|(label, p)| format!("{label}={p:.4}"))
        .collect();
    out.push_str(&format!("scores: {}\n", scores.join(" ")));
    out
}

pub fn run(args: &JudgeArgs, settings: &Settings) -> Result<()> {
    let query = query_for(&args.text, args.second.as_deref(), args.mode)?;
    let scorer = settings.build_scorer()?;
    run_recorded("judge", args.out.as_deref(), settings, args, settings.seed, |rec| {
        if let Some(path) = settings.backend_file() {
            rec.input_file(&path)?;
        }
        let input = encode_query(&query, settings.format);
        rec.input_value("query", &input);
        let verdict = scorer.judge(&input, args.mode)?;
        let output = JudgeOutput {
            schema_version: SCHEMA_VERSION,
            backend: scorer.describe(),
            mode: args.mode,
            input: &input,
            class: verdict.chosen.as_str(),
            text: verdict.text_judgment.as_deref(),
            class_scores: verdict
                .class_scores
                .iter()
                .map(|(label, p)| (label.as_str(), *p))
                .collect(),
        };
        rec.write_json("verdict.json", &output)?;
        print!("{}", render_verdict(&verdict));
        Ok(())
    })
}
