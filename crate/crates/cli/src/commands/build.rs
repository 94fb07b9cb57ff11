//! `normbank build`: source corpora to split, serialized dataset files.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use normbank::ingest::{load_source, SourceRecord, Strictness};
use normbank::serialize::{encode_input, render_split, WireFormat};
use normbank::unify::{split_dataset, unify_record, AugmentConfig, Unified};
use normbank::{normalize_judgment, Mode, PolarityMap, QAInstance, Source, Split};
use rayon::prelude::*;
use serde::Serialize;

use super::{run_recorded, to_jsonl};
use crate::manifest::{RunRecorder, SCHEMA_VERSION};
use crate::settings::Settings;

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildArgs {
    /// Directory holding social_chem.jsonl, ethics.jsonl, moral_stories.jsonl,
    /// sbic.jsonl and scruples.jsonl
    #[arg(long)]
    pub sources: PathBuf,
    /// Augmentation settings (TOML); the bundled file is used when omitted
    #[arg(long)]
    pub augment: Option<PathBuf>,
    /// Polarity map (TSV) used to report unmapped judgments
    #[arg(long)]
    pub polarity_map: Option<PathBuf>,
    /// Output directory [default: runs/build]
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Published dataset sizes as all/train/validation/test, for comparison.
const REFERENCE_COUNTS: [(&str, [u64; 4]); 8] = [
    ("free_form", [1_164_810, 966_196, 99_874, 98_740]),
    ("free_form/social_chem", [971_620, 810_448, 80_800, 80_372]),
    ("free_form/ethics", [20_948, 13_322, 4_218, 3_408]),
    ("free_form/moral_stories", [144_000, 120_000, 12_000, 12_000]),
    ("free_form/sbic", [28_242, 22_426, 2_856, 2_960]),
    ("yes_no", [477_514, 398_468, 39_606, 39_440]),
    ("relative", [28_296, 23_596, 2_340, 2_360]),
    ("total", [1_670_620, 1_388_260, 141_820, 140_540]),
];

#[derive(Debug, Serialize)]
struct CountRow {
    task: &'static str,
    /// all, train, val, test
    counts: [u64; 4],
    reference: [u64; 4],
    /// train, val, test as fractions of all.
    shares: [f64; 3],
    reference_shares: [f64; 3],
}

#[derive(Debug, Serialize)]
struct BuildStats {
    schema_version: u32,
    seed: u64,
    format: WireFormat,
    records: BTreeMap<Source, usize>,
    skipped_records: BTreeMap<Source, usize>,
    filtered_long_scenarios: usize,
    unnegatable_rules: usize,
    duplicate_inputs: usize,
    unmapped_judgments: usize,
    counts: Vec<CountRow>,
}

fn shares(c: [u64; 4]) -> [f64; 3] {
    if c[0] == 0 {
        return [0.0; 3];
    }
    let all = c[0] as f64;
    let r = |x: u64| (x as f64 / all * 10_000.0).round() / 10_000.0;
    [r(c[1]), r(c[2]), r(c[3])]
}

fn task_key(i: &QAInstance) -> Option<&'static str> {
    match (i.mode, i.source) {
        (Mode::FreeForm, Source::SocialChem) => Some("free_form/social_chem"),
        (Mode::FreeForm, Source::Ethics) => Some("free_form/ethics"),
        (Mode::FreeForm, Source::MoralStories) => Some("free_form/moral_stories"),
        (Mode::FreeForm, Source::Sbic) => Some("free_form/sbic"),
        _ => None,
    }
}

fn count_rows(instances: &[QAInstance]) -> Vec<CountRow> {
    let mut counts: BTreeMap<&str, [u64; 4]> = BTreeMap::new();
    for i in instances {
        let slot = match i.split {
            Some(Split::Train) => 1,
            Some(Split::Val) => 2,
            Some(Split::Test) => 3,
            None => continue,
        };
        let mut keys = vec![i.mode.as_str(), "total"];
        keys.extend(task_key(i));
        for key in keys {
            let c = counts.entry(key).or_default();
            c[0] += 1;
            c[slot] += 1;
        }
    }
    REFERENCE_COUNTS
        .iter()
        .map(|&(task, reference)| {
            let c = counts.get(task).copied().unwrap_or_default();
            CountRow {
                task,
                counts: c,
                reference,
                shares: shares(c),
                reference_shares: shares(reference),
            }
        })
        .collect()
}

pub fn run(args: &BuildArgs, settings: &Settings) -> Result<()> {
    let mut cfg = match &args.augment {
        Some(path) => AugmentConfig::load(path)?,
        None => AugmentConfig::default(),
    };
    if let Some(seed) = settings.seed {
        cfg.seed = seed;
    }
    run_recorded("build", args.out.as_deref(), settings, args, Some(cfg.seed), |rec| {
        build(args, settings, &cfg, rec)
    })
}

fn build(args: &BuildArgs, settings: &Settings, cfg: &AugmentConfig, rec: &mut RunRecorder) -> Result<()> {
    if let Some(path) = &args.augment {
        rec.input_file(path)?;
    }
    let map = match &args.polarity_map {
        Some(path) => {
            rec.input_file(path)?;
            PolarityMap::load(path)?
        }
        None => PolarityMap::builtin(),
    };
    let strictness = if settings.lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };

    let mut records: Vec<SourceRecord> = Vec::new();
    let mut record_counts = BTreeMap::new();
    let mut skipped_counts = BTreeMap::new();
    for source in Source::ALL {
        let path = args.sources.join(format!("{source}.jsonl"));
        if !path.is_file() {
            bail!("missing source file for {source}: {}", path.display());
        }
        rec.input_file(&path)?;
        let outcome = load_source(&path, source, strictness).with_context(|| format!("loading source {source}"))?;
        for skipped in &outcome.skipped {
            log::warn!("skipped record: {skipped}");
        }
        record_counts.insert(source, outcome.records.len());
        skipped_counts.insert(source, outcome.skipped.len());
        records.extend(outcome.records);
    }

    let unified: Vec<Unified> = records.par_iter().map(|r| unify_record(r, cfg)).collect();
    let mut instances = Vec::new();
    let mut filtered_long = 0;
    let mut unnegatable = 0;
    for (record, result) in records.iter().zip(unified) {
        match result {
            Unified::FilteredLong => filtered_long += 1,
            Unified::Instances {
                instances: produced,
                unnegatable: skipped_pair,
            } => {
                if skipped_pair {
                    log::info!("{}: judgment head could not be negated, no yes/no pair", record.id);
                    unnegatable += 1;
                }
                instances.extend(produced);
            }
        }
    }
    for i in &instances {
        i.validate().with_context(|| format!("instance {}", i.id))?;
    }
    let instances = split_dataset(instances, cfg.split, cfg.seed)?;

    let mut seen = HashSet::new();
    let duplicate_inputs = instances
        .iter()
        .filter(|i| !seen.insert((i.mode, encode_input(i, settings.format))))
        .count();
    let unmapped_judgments = instances
        .iter()
        .filter(|i| i.mode == Mode::FreeForm)
        .filter_map(|i| i.text_judgment.as_deref())
        .filter(|t| normalize_judgment(t).map(|n| map.get(&n).is_none()).unwrap_or(true))
        .count();

    let mut rendered = Vec::new();
    for split in Split::ALL {
        let part: Vec<QAInstance> = instances.iter().filter(|i| i.split == Some(split)).cloned().collect();
        let (src, tgt) = render_split(&part, settings.format)?;
        rendered.push((split, src, tgt, to_jsonl(&part)));
    }
    let stats = BuildStats {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        format: settings.format,
        records: record_counts,
        skipped_records: skipped_counts,
        filtered_long_scenarios: filtered_long,
        unnegatable_rules: unnegatable,
        duplicate_inputs,
        unmapped_judgments,
        counts: count_rows(&instances),
    };

    for (split, src, tgt, jsonl) in &rendered {
        rec.write(&format!("{split}.src"), src)?;
        rec.write(&format!("{split}.tgt"), tgt)?;
        rec.write(&format!("{split}.jsonl"), jsonl)?;
    }
    rec.write_json("stats.json", &stats)?;

    let total = &stats.counts[stats.counts.len() - 1].counts;
    println!(
        "built {} instances (train {}, val {}, test {}) into {}",
        total[0],
        total[1],
        total[2],
        total[3],
        rec.out_dir().display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shares_round_to_four_places() {
        assert_eq!(shares([3, 1, 1, 1]), [0.3333, 0.3333, 0.3333]);
        assert_eq!(shares([0, 0, 0, 0]), [0.0; 3]);
    }

    #[test]
    fn reference_rows_add_up() {
        let sum = |task: &str| REFERENCE_COUNTS.iter().find(|(t, _)| *t == task).unwrap().1;
        let ff = sum("free_form");
        let parts: u64 = ["social_chem", "ethics", "moral_stories", "sbic"]
            .iter()
            .map(|s| sum(&format!("free_form/{s}"))[0])
            .sum();
        assert_eq!(ff[0], parts);
        assert_eq!(sum("total")[0], ff[0] + sum("yes_no")[0] + sum("relative")[0]);
    }
}
