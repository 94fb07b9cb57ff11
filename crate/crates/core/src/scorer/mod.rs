//! Judgment backends behind one contract.
//!
//! A [`Scorer`] takes an encoded input (see [`crate::serialize`]) and a mode
//! and returns a [`Verdict`]. Backends:
//!
//! * [`LexiconScorer`]: deterministic keyword baseline, needs no model.
//! * [`RemoteScorer`]: JSON-over-HTTP client for an external model server.
//! * [`TableScorer`]: scripted answers from a JSON file, for fixtures.

mod lexicon;
mod remote;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexicon::LexiconScorer;
pub use remote::{remote_judge, JudgeRequest, JudgeResponse, RemoteConfig, RemoteScorer, PROTOCOL_VERSION};

use crate::serialize::WireFormat;
use crate::types::{ClassLabel, Mode, Query};

#[derive(Debug, Error)]
pub enum ScorerError {
    /// Network failure, timeout or server error after all retries.
    #[error("transport error for inputs {indices:?}: {message}")]
    Transport { indices: Vec<usize>, message: String },
    /// The server answered with something that does not follow the protocol.
    #[error("protocol error: {0}")]
    Protocol(String),
    /// A caller or backend broke the scorer contract.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("backend setup: {0}")]
    Setup(String),
}

/// Class distribution and optional open-text judgment for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class_scores: BTreeMap<ClassLabel, f64>,
    pub chosen: ClassLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_judgment: Option<String>,
}

/// Highest-scoring label; ties go to the label listed first in
/// [`Mode::labels`] (negative before discretionary before positive).
pub fn argmax(mode: Mode, scores: &BTreeMap<ClassLabel, f64>) -> Option<ClassLabel> {
    let mut best: Option<(ClassLabel, f64)> = None;
    for &label in mode.labels() {
        let Some(&score) = scores.get(&label) else {
            continue;
        };
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((label, score));
        }
    }
    best.map(|(label, _)| label)
}

impl Verdict {
    /// Verdict with all mass on `label`.
    pub fn one_hot(label: ClassLabel, text_judgment: Option<String>) -> Self {
        let class_scores = label
            .mode()
            .labels()
            .iter()
            .map(|&l| (l, if l == label { 1.0 } else { 0.0 }))
            .collect();
        Self {
            class_scores,
            chosen: label,
            text_judgment,
        }
    }

    /// Builds a verdict from a full score table for `mode`.
    ///
    /// Scores must be finite and non-negative with a positive sum; tables that
    /// do not sum to one are renormalized with a warning.
    pub fn from_scores(
        mode: Mode,
        mut class_scores: BTreeMap<ClassLabel, f64>,
        text_judgment: Option<String>,
    ) -> Result<Self, ScorerError> {
        for label in class_scores.keys() {
            if label.mode() != mode {
                return Err(ScorerError::Contract(format!(
                    "label {label} does not belong to mode {mode}"
                )));
            }
        }
        for label in mode.labels() {
            match class_scores.get(label) {
                None => return Err(ScorerError::Contract(format!("missing score for {label}"))),
                Some(s) if !s.is_finite() || *s < 0.0 => {
                    return Err(ScorerError::Contract(format!("score for {label} is {s}")))
                }
                Some(_) => {}
            }
        }
        let sum: f64 = class_scores.values().sum();
        if sum <= 0.0 {
            return Err(ScorerError::Contract("scores sum to zero".into()));
        }
        if (sum - 1.0).abs() > 1e-6 {
            log::warn!("renormalizing class scores that sum to {sum}");
            for s in class_scores.values_mut() {
                *s /= sum;
            }
        }
        let chosen = argmax(mode, &class_scores).expect("every label has a score");
        Ok(Self {
            class_scores,
            chosen,
            text_judgment,
        })
    }

    pub fn mode(&self) -> Mode {
        self.chosen.mode()
    }

    pub fn score(&self, label: ClassLabel) -> Option<f64> {
        self.class_scores.get(&label).copied()
    }
}

/// Positive minus negative probability of a free-form verdict.
pub fn moral_score(v: &Verdict) -> Result<f64, ScorerError> {
    let get = |label| {
        v.score(label)
            .ok_or_else(|| ScorerError::Contract(format!("verdict has no {label} score")))
    };
    Ok(get(ClassLabel::Positive)? - get(ClassLabel::Negative)?)
}

/// A judgment backend. Implementations must tolerate concurrent calls.
pub trait Scorer: Send + Sync {
    fn judge(&self, encoded_input: &str, mode: Mode) -> Result<Verdict, ScorerError>;

    /// Judges many inputs; results are index-aligned with `inputs`.
    fn judge_batch(&self, inputs: &[String], mode: Mode) -> Result<Vec<Verdict>, ScorerError> {
        inputs.iter().map(|input| self.judge(input, mode)).collect()
    }

    /// Short description recorded in run manifests.
    fn describe(&self) -> String;
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn judge(&self, encoded_input: &str, mode: Mode) -> Result<Verdict, ScorerError> {
        (**self).judge(encoded_input, mode)
    }

    fn judge_batch(&self, inputs: &[String], mode: Mode) -> Result<Vec<Verdict>, ScorerError> {
        (**self).judge_batch(inputs, mode)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// One scripted or served answer: scores keyed by label name plus text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub class_scores: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl ScoreEntry {
    pub fn from_verdict(v: &Verdict) -> Self {
        Self {
            class_scores: v
                .class_scores
                .iter()
                .map(|(l, s)| (l.as_str().to_string(), *s))
                .collect(),
            text: v.text_judgment.clone(),
        }
    }

    pub fn to_verdict(&self, mode: Mode) -> Result<Verdict, ScorerError> {
        let mut scores = BTreeMap::new();
        for (name, score) in &self.class_scores {
            let label: ClassLabel = name
                .parse()
                .map_err(|_| ScorerError::Contract(format!("unknown class label `{name}`")))?;
            scores.insert(label, *score);
        }
        Verdict::from_scores(mode, scores, self.text.clone())
    }
}

/// Scripted backend: encoded input → fixed answer, with an optional `"*"`
/// fallback entry.
///
/// File format: `{"<encoded input>": {"class_scores": {...}, "text": "..."}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableScorer {
    entries: BTreeMap<String, ScoreEntry>,
    origin: String,
}

impl TableScorer {
    pub fn new(entries: BTreeMap<String, ScoreEntry>) -> Self {
        Self {
            entries,
            origin: "inline".into(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ScorerError::Setup(format!("reading score table {}: {e}", path.display())))?;
        let entries = serde_json::from_str(&text)
            .map_err(|e| ScorerError::Setup(format!("parsing score table {}: {e}", path.display())))?;
        Ok(Self {
            entries,
            origin: path.display().to_string(),
        })
    }
}

impl Scorer for TableScorer {
    fn judge(&self, encoded_input: &str, mode: Mode) -> Result<Verdict, ScorerError> {
        let entry = self
            .entries
            .get(encoded_input)
            .or_else(|| self.entries.get("*"))
            .ok_or_else(|| ScorerError::Contract(format!("no scripted answer for `{encoded_input}`")))?;
        entry.to_verdict(mode)
    }

    fn describe(&self) -> String {
        format!("table:{}", self.origin)
    }
}

/// Backend selection shared by the command-line tools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Lexicon,
    Remote(String),
    Table(String),
}

impl std::str::FromStr for BackendSpec {
    type Err = ScorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "lexicon" {
            Ok(BackendSpec::Lexicon)
        } else if let Some(url) = s.strip_prefix("remote:") {
            Ok(BackendSpec::Remote(url.to_string()))
        } else if let Some(path) = s.strip_prefix("table:") {
            Ok(BackendSpec::Table(path.to_string()))
        } else {
            Err(ScorerError::Setup(format!(
                "unknown backend `{s}` (expected lexicon, remote:URL or table:PATH)"
            )))
        }
    }
}

impl BackendSpec {
    /// Instantiates the backend; `remote` supplies transport settings.
    pub fn build(&self, remote: RemoteConfig) -> Result<Box<dyn Scorer>, ScorerError> {
        Ok(match self {
            BackendSpec::Lexicon => Box::new(LexiconScorer::new()),
            BackendSpec::Remote(url) => Box::new(RemoteScorer::new(RemoteConfig {
                endpoint: url.clone(),
                ..remote
            })?),
            BackendSpec::Table(path) => Box::new(TableScorer::load(Path::new(path))?),
        })
    }
}

fn sentence(text: &str) -> &str {
    text.trim().trim_end_matches(['.', '!', '?']).trim_end()
}

/// Natural-language prompts describing each class, for perplexity ranking by
/// an external language model. Returned in [`Mode::labels`] order.
pub fn zeroshot_prompts(query: &Query, mode: Mode) -> Vec<(ClassLabel, String)> {
    match (mode, query) {
        (Mode::Relative, Query::Pair { first, second }) => {
            let stem = format!("Action1: {}. Action2: {}.", sentence(first), sentence(second));
            vec![
                (ClassLabel::First, format!("{stem} Action1 is more moral than Action2.")),
                (
                    ClassLabel::Second,
                    format!("{stem} Action2 is more moral than Action1."),
                ),
            ]
        }
        (Mode::Relative, Query::Single(text)) => zeroshot_prompts(&Query::pair(text.as_str(), ""), mode),
        (_, query) => {
            let text = query.text();
            let action = sentence(&text);
            let suffixes: &[(ClassLabel, &str)] = if mode == Mode::YesNo {
                &[
                    (ClassLabel::Disagree, "This statement is false/incorrect/wrong/bad."),
                    (ClassLabel::Agree, "This statement is true/correct/right/good."),
                ]
            } else {
                &[
                    (ClassLabel::Negative, "This action is bad/unethical/immoral/etc."),
                    (ClassLabel::Discretionary, "This action is okay/fine/expected/etc."),
                    (ClassLabel::Positive, "This action is good/ethical/moral/etc."),
                ]
            };
            suffixes
                .iter()
                .map(|(label, suffix)| (*label, format!("{action}. {suffix}")))
                .collect()
        }
    }
}

/// Default transport settings paired with a wire format.
pub fn remote_defaults(format: WireFormat) -> RemoteConfig {
    RemoteConfig {
        format,
        ..RemoteConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scores(neg: f64, disc: f64, pos: f64) -> BTreeMap<ClassLabel, f64> {
        BTreeMap::from([
            (ClassLabel::Negative, neg),
            (ClassLabel::Discretionary, disc),
            (ClassLabel::Positive, pos),
        ])
    }

    #[test]
    fn argmax_and_ties() {
        let v = Verdict::from_scores(Mode::FreeForm, scores(0.1, 0.2, 0.7), None).unwrap();
        assert_eq!(v.chosen, ClassLabel::Positive);
        let tie = Verdict::from_scores(Mode::FreeForm, scores(0.4, 0.2, 0.4), None).unwrap();
        assert_eq!(tie.chosen, ClassLabel::Negative);
        let tie = Verdict::from_scores(Mode::FreeForm, scores(0.2, 0.4, 0.4), None).unwrap();
        assert_eq!(tie.chosen, ClassLabel::Discretionary);
    }

    #[test]
    fn from_scores_checks_and_renormalizes() {
        let v = Verdict::from_scores(Mode::FreeForm, scores(1.0, 1.0, 2.0), None).unwrap();
        assert!((v.score(ClassLabel::Positive).unwrap() - 0.5).abs() < 1e-12);
        assert!(Verdict::from_scores(Mode::FreeForm, scores(0.0, 0.0, 0.0), None).is_err());
        assert!(Verdict::from_scores(Mode::FreeForm, scores(-0.1, 0.5, 0.6), None).is_err());
        assert!(Verdict::from_scores(Mode::YesNo, scores(0.1, 0.2, 0.7), None).is_err());
        let mut partial = scores(0.5, 0.5, 0.0);
        partial.remove(&ClassLabel::Positive);
        assert!(Verdict::from_scores(Mode::FreeForm, partial, None).is_err());
    }

    #[test]
    fn moral_score_examples() {
        let v = Verdict::from_scores(Mode::FreeForm, scores(0.05, 0.05, 0.9), None).unwrap();
        assert!((moral_score(&v).unwrap() - 0.85).abs() < 1e-12);
        let v = Verdict::one_hot(ClassLabel::Positive, None);
        assert_eq!(moral_score(&v).unwrap(), 1.0);
        assert!(moral_score(&Verdict::one_hot(ClassLabel::Agree, None)).is_err());
    }

    #[test]
    fn prompts() {
        let p = zeroshot_prompts(&Query::single("eating pizza"), Mode::FreeForm);
        assert_eq!(p.len(), 3);
        assert!(p.contains(&(
            ClassLabel::Positive,
            "eating pizza. This action is good/ethical/moral/etc.".into()
        )));
        assert!(p.contains(&(
            ClassLabel::Negative,
            "eating pizza. This action is bad/unethical/immoral/etc.".into()
        )));
        assert!(p.contains(&(
            ClassLabel::Discretionary,
            "eating pizza. This action is okay/fine/expected/etc.".into()
        )));
        assert_eq!(
            zeroshot_prompts(&Query::single("It's good to help."), Mode::YesNo).len(),
            2
        );
        let r = zeroshot_prompts(&Query::pair("a", "b"), Mode::Relative);
        assert_eq!(r[0].1, "Action1: a. Action2: b. Action1 is more moral than Action2.");
        assert!(r.iter().all(|(_, p)| p.contains("Action1:") && p.contains("Action2:")));
    }

    #[test]
    fn table_scorer_lookup() {
        let entry = ScoreEntry {
            class_scores: BTreeMap::from([("agree".into(), 0.8), ("disagree".into(), 0.2)]),
            text: Some("yes, it's ok".into()),
        };
        let table = TableScorer::new(BTreeMap::from([("[moral_single]: x".to_string(), entry)]));
        assert_eq!(
            table.judge("[moral_single]: x", Mode::YesNo).unwrap().chosen,
            ClassLabel::Agree
        );
        assert!(table.judge("[moral_single]: y", Mode::YesNo).is_err());
    }

    #[test]
    fn backend_specs() {
        assert_eq!("lexicon".parse::<BackendSpec>().unwrap(), BackendSpec::Lexicon);
        assert_eq!(
            "remote:http://h/judge".parse::<BackendSpec>().unwrap(),
            BackendSpec::Remote("http://h/judge".into())
        );
        assert!("gpt".parse::<BackendSpec>().is_err());
    }

    proptest! {
        #[test]
        fn moral_score_is_antisymmetric(neg in 0.0f64..1.0, disc in 0.0f64..1.0, pos in 0.0f64..1.0) {
            prop_assume!(neg + disc + pos > 1e-6);
            let a = Verdict::from_scores(Mode::FreeForm, scores(neg, disc, pos), None).unwrap();
            let b = Verdict::from_scores(Mode::FreeForm, scores(pos, disc, neg), None).unwrap();
            let (sa, sb) = (moral_score(&a).unwrap(), moral_score(&b).unwrap());
            prop_assert!((sa + sb).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&sa));
        }
    }
}
