//! Loaders for the five source corpora.
//!
//! Every source is read from a UTF-8 file holding one JSON object per line.
//! Blank lines and lines starting with `#` are skipped. Field names per source:
//!
//! | source          | fields                                                                  |
//! |-----------------|-------------------------------------------------------------------------|
//! | `social_chem`   | `action`, `rot`, `judgment`, `class`, optional `situation`               |
//! | `ethics`        | `scenario`, `class` (`positive` or `negative`)                           |
//! | `moral_stories` | `situation`, `intention`, `moral_action`, `immoral_action`              |
//! | `sbic`          | `post`, `offensive` (bool), `lewd` (bool)                               |
//! | `scruples`      | `action1`, `action2`, `less_ethical` (`first` or `second`)              |
//!
//! `class` is one of `positive`, `discretionary`, `negative`. Each record gets
//! the stable ID `<source>:<line number>` (1-based).

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;

use crate::types::{ClassLabel, Source};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name} line {line}: malformed record: {reason}")]
    Malformed {
        source_name: Source,
        line: usize,
        reason: String,
    },
    #[error("{source_name} line {line}: {reason}")]
    Record {
        source_name: Source,
        line: usize,
        reason: String,
    },
}

/// Whether record-level problems abort loading or are skipped and counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotRecord {
    pub situation: String,
    pub action: String,
    pub rot_text: String,
    pub judgment: String,
    pub class: ClassLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EthicsRecord {
    pub scenario: String,
    pub class: ClassLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoryRecord {
    pub situation: String,
    pub intention: String,
    pub moral_action: String,
    pub immoral_action: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostRecord {
    pub post: String,
    pub offensive: bool,
    pub lewd: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LessEthical {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionPairRecord {
    pub action1: String,
    pub action2: String,
    pub less_ethical: LessEthical,
}

/// Payload of one source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordData {
    Rot(RotRecord),
    Ethics(EthicsRecord),
    Story(StoryRecord),
    Post(PostRecord),
    ActionPair(ActionPairRecord),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRecord {
    /// `<source>:<line number>`.
    pub id: String,
    pub line: usize,
    pub data: RecordData,
}

/// Records of one file plus what was skipped under lenient loading.
#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub records: Vec<SourceRecord>,
    pub skipped: Vec<IngestError>,
}

pub fn load_source(path: &Path, source: Source, strictness: Strictness) -> Result<LoadOutcome, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_source(&text, source, strictness)
}

/// Parses source text already in memory; see [`load_source`].
pub fn parse_source(text: &str, source: Source, strictness: Strictness) -> Result<LoadOutcome, IngestError> {
    let mut outcome = LoadOutcome::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_line(trimmed, source, line_no) {
            Ok(data) => outcome.records.push(SourceRecord {
                id: format!("{source}:{line_no}"),
                line: line_no,
                data,
            }),
            Err(err @ IngestError::Record { .. }) if strictness == Strictness::Lenient => {
                outcome.skipped.push(err);
            }
            Err(err) => return Err(err),
        }
    }
    Ok(outcome)
}

#[derive(Deserialize)]
struct RawRot {
    #[serde(default)]
    situation: Option<String>,
    action: String,
    rot: String,
    judgment: String,
    class: String,
}

#[derive(Deserialize)]
struct RawEthics {
    scenario: String,
    class: String,
}

#[derive(Deserialize)]
struct RawStory {
    situation: String,
    intention: String,
    moral_action: String,
    immoral_action: String,
}

#[derive(Deserialize)]
struct RawPost {
    post: String,
    offensive: bool,
    lewd: bool,
}

#[derive(Deserialize)]
struct RawPair {
    action1: String,
    action2: String,
    less_ethical: LessEthical,
}

fn parse_line(line: &str, source: Source, line_no: usize) -> Result<RecordData, IngestError> {
    let record_err = |reason: String| IngestError::Record {
        source_name: source,
        line: line_no,
        reason,
    };
    let data = match source {
        Source::SocialChem => {
            let raw: RawRot = decode(line, source, line_no)?;
            let class = free_form_class(&raw.class).map_err(record_err)?;
            RecordData::Rot(RotRecord {
                situation: raw.situation.unwrap_or_default().trim().to_string(),
                action: required("action", raw.action).map_err(record_err)?,
                rot_text: required("rot", raw.rot).map_err(record_err)?,
                judgment: required("judgment", raw.judgment).map_err(record_err)?,
                class,
            })
        }
        Source::Ethics => {
            let raw: RawEthics = decode(line, source, line_no)?;
            let class = match free_form_class(&raw.class).map_err(record_err)? {
                ClassLabel::Discretionary => {
                    return Err(record_err("ethics class must be positive or negative".into()))
                }
                other => other,
            };
            RecordData::Ethics(EthicsRecord {
                scenario: required("scenario", raw.scenario).map_err(record_err)?,
                class,
            })
        }
        Source::MoralStories => {
            let raw: RawStory = decode(line, source, line_no)?;
            RecordData::Story(StoryRecord {
                situation: required("situation", raw.situation).map_err(record_err)?,
                intention: required("intention", raw.intention).map_err(record_err)?,
                moral_action: required("moral_action", raw.moral_action).map_err(record_err)?,
                immoral_action: required("immoral_action", raw.immoral_action).map_err(record_err)?,
            })
        }
        Source::Sbic => {
            let raw: RawPost = decode(line, source, line_no)?;
            RecordData::Post(PostRecord {
                post: required("post", raw.post).map_err(record_err)?,
                offensive: raw.offensive,
                lewd: raw.lewd,
            })
        }
        Source::Scruples => {
            let raw: RawPair = decode(line, source, line_no)?;
            let action1 = required("action1", raw.action1).map_err(record_err)?;
            let action2 = required("action2", raw.action2).map_err(record_err)?;
            if action1 == action2 {
                return Err(record_err("action1 and action2 are identical".into()));
            }
            RecordData::ActionPair(ActionPairRecord {
                action1,
                action2,
                less_ethical: raw.less_ethical,
            })
        }
    };
    Ok(data)
}

/// JSON syntax errors are fatal; shape errors (missing or mistyped fields)
/// are record-level and may be skipped.
fn decode<T: DeserializeOwned>(line: &str, source: Source, line_no: usize) -> Result<T, IngestError> {
    serde_json::from_str(line).map_err(|e| {
        if e.is_data() {
            IngestError::Record {
                source_name: source,
                line: line_no,
                reason: e.to_string(),
            }
        } else {
            IngestError::Malformed {
                source_name: source,
                line: line_no,
                reason: e.to_string(),
            }
        }
    })
}

fn required(field: &str, value: String) -> Result<String, String> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        Err(format!("required field `{field}` is empty"))
    } else {
        Ok(trimmed.to_string())
    }
}

fn free_form_class(raw: &str) -> Result<ClassLabel, String> {
    match raw.parse::<ClassLabel>() {
        Ok(label @ (ClassLabel::Positive | ClassLabel::Discretionary | ClassLabel::Negative)) => Ok(label),
        _ => Err(format!(
            "class must be positive, discretionary or negative, got `{raw}`"
        )),
    }
}

/// Sentence count by terminator runs (`.`, `!`, `?`); a trailing fragment
/// without terminator counts as a sentence.
pub fn sentence_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_terminator = false;
    let mut pending = false;
    for c in text.chars() {
        if matches!(c, '.' | '!' | '?') {
            if !in_terminator && pending {
                count += 1;
                pending = false;
            }
            in_terminator = true;
        } else {
            in_terminator = false;
            if !c.is_whitespace() {
                pending = true;
            }
        }
    }
    if pending {
        count += 1;
    }
    count
}

/// ETHICS scenarios kept for unification: one or two sentences.
pub fn is_short_scenario(text: &str) -> bool {
    sentence_count(text) <= 2
}
