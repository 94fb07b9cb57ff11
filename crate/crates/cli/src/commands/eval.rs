//! `normbank eval`: accuracy of predictions against gold instances.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use normbank::eval::{evaluate, EvalReport};
use normbank::scorer::ScoreEntry;
use normbank::serialize::{decode_output, encode_input, WireFormat};
use normbank::{ClassLabel, Mode, PolarityMap, QAInstance, Scorer, Verdict};
use serde::Serialize;

use super::{read_instances, run_recorded, to_jsonl};
use crate::settings::Settings;

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Gold instances, one JSON object per line (as written by `build`)
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted target sequences, one per gold line; without it the
    /// configured backend judges the gold inputs
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Polarity map (TSV) for the text metrics
    #[arg(long)]
    pub polarity_map: Option<PathBuf>,
    /// Output directory [default: runs/eval]
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    #[serde(flatten)]
    report: EvalReport,
    /// Prediction lines that failed to parse; each counts as incorrect.
    unparseable_predictions: usize,
    predictions: String,
}

/// A verdict guaranteed to be wrong on every metric for `gold`.
fn certain_miss(gold: &QAInstance) -> Verdict {
    let wrong = match gold.class {
        ClassLabel::Positive | ClassLabel::Discretionary => ClassLabel::Negative,
        ClassLabel::Negative => ClassLabel::Positive,
        ClassLabel::Agree => ClassLabel::Disagree,
        ClassLabel::Disagree => ClassLabel::Agree,
        ClassLabel::First => ClassLabel::Second,
        ClassLabel::Second => ClassLabel::First,
    };
    Verdict::one_hot(wrong, None)
}

/// Decodes a prediction file; lines that do not parse become certain misses.
pub fn decode_predictions(text: &str, golds: &[QAInstance], f: WireFormat) -> Result<(Vec<Verdict>, usize)> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != golds.len() {
        bail!("{} prediction lines for {} gold instances", lines.len(), golds.len());
    }
    let mut unparseable = 0;
    let verdicts = lines
        .iter()
        .zip(golds)
        .enumerate()
        .map(|(n, (line, gold))| match decode_output(line, gold.mode, f) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("prediction line {}: {e}", n + 1);
                unparseable += 1;
                certain_miss(gold)
            }
        })
        .collect();
    Ok((verdicts, unparseable))
}

/// Judges every gold input, one batch per mode, keeping gold order.
pub fn judge_all(scorer: &dyn Scorer, golds: &[QAInstance], f: WireFormat) -> Result<Vec<Verdict>> {
    let mut slots: Vec<Option<Verdict>> = vec![None; golds.len()];
    for mode in Mode::ALL {
        let idx: Vec<usize> = (0..golds.len()).filter(|&i| golds[i].mode == mode).collect();
        if idx.is_empty() {
            continue;
        }
        let inputs: Vec<String> = idx.iter().map(|&i| encode_input(&golds[i], f)).collect();
        let verdicts = scorer
            .judge_batch(&inputs, mode)
            .with_context(|| format!("judging {} {mode} inputs", inputs.len()))?;
        for (i, v) in idx.into_iter().zip(verdicts) {
            slots[i] = Some(v);
        }
    }
    Ok(slots.into_iter().map(|v| v.expect("every mode judged")).collect())
}

fn load_map(path: Option<&Path>) -> Result<PolarityMap> {
    Ok(match path {
        Some(p) => PolarityMap::load(p)?,
        None => PolarityMap::builtin(),
    })
}

pub fn run(args: &EvalArgs, settings: &Settings) -> Result<()> {
    let scorer = match args.pred {
        Some(_) => None,
        None => Some(settings.build_scorer()?),
    };
    run_recorded("eval", args.out.as_deref(), settings, args, settings.seed, |rec| {
        rec.input_file(&args.gold)?;
        let golds = read_instances(&args.gold)?;
        if golds.is_empty() {
            bail!("{} holds no instances", args.gold.display());
        }
        let map = load_map(args.polarity_map.as_deref())?;
        if let Some(path) = &args.polarity_map {
            rec.input_file(path)?;
        }
        let (preds, unparseable, source) = match (&args.pred, &scorer) {
            (Some(path), _) => {
                rec.input_file(path)?;
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let (preds, bad) = decode_predictions(&text, &golds, settings.format)?;
                (preds, bad, format!("file:{}", path.display()))
            }
            (None, Some(scorer)) => {
                if let Some(path) = settings.backend_file() {
                    rec.input_file(&path)?;
                }
                let preds = judge_all(scorer.as_ref(), &golds, settings.format)?;
                let entries: Vec<ScoreEntry> = preds.iter().map(ScoreEntry::from_verdict).collect();
                rec.write("predictions.jsonl", to_jsonl(&entries))?;
                (preds, 0, scorer.describe())
            }
            (None, None) => unreachable!("a scorer is built whenever no prediction file is given"),
        };
        let report = evaluate(&golds, &preds, &map)?;
        println!("{report}");
        if unparseable > 0 {
            println!("unparseable predictions (counted incorrect): {unparseable}");
        }
        rec.write_json(
            "eval_report.json",
            &EvalOutput {
                report,
                unparseable_predictions: unparseable,
                predictions: source,
            },
        )?;
        Ok(())
    })
}
