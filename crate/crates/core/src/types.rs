//! Shared domain vocabulary: modes, class labels, polarity and the unified
//! QA instance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Task mode of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FreeForm,
    YesNo,
    Relative,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::FreeForm, Mode::YesNo, Mode::Relative];

    /// Labels of this mode, in tie-break order: on equal scores the earlier
    /// label wins.
    pub fn labels(self) -> &'static [ClassLabel] {
        match self {
            Mode::FreeForm => &[ClassLabel::Negative, ClassLabel::Discretionary, ClassLabel::Positive],
            Mode::YesNo => &[ClassLabel::Disagree, ClassLabel::Agree],
            Mode::Relative => &[ClassLabel::First, ClassLabel::Second],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FreeForm => "free_form",
            Mode::YesNo => "yes_no",
            Mode::Relative => "relative",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "free_form" | "freeform" => Ok(Mode::FreeForm),
            "yes_no" | "yesno" => Ok(Mode::YesNo),
            "relative" => Ok(Mode::Relative),
            _ => Err(ParseEnumError::new("mode", s)),
        }
    }
}

/// Classification label across all three modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Positive,
    Discretionary,
    Negative,
    Agree,
    Disagree,
    First,
    Second,
}

impl ClassLabel {
    pub fn mode(self) -> Mode {
        match self {
            ClassLabel::Positive | ClassLabel::Discretionary | ClassLabel::Negative => Mode::FreeForm,
            ClassLabel::Agree | ClassLabel::Disagree => Mode::YesNo,
            ClassLabel::First | ClassLabel::Second => Mode::Relative,
        }
    }

    /// Integer used inside the class block of the classic wire format.
    ///
    /// Free-form uses 1/0/-1 (positive/discretionary/negative), yes/no uses
    /// 1/-1 (agree/disagree) and relative uses 1/2 (first/second).
    pub fn classic_code(self) -> i32 {
        match self {
            ClassLabel::Positive => 1,
            ClassLabel::Discretionary => 0,
            ClassLabel::Negative => -1,
            ClassLabel::Agree => 1,
            ClassLabel::Disagree => -1,
            ClassLabel::First => 1,
            ClassLabel::Second => 2,
        }
    }

    pub fn from_classic_code(mode: Mode, code: i32) -> Option<ClassLabel> {
        mode.labels().iter().copied().find(|label| label.classic_code() == code)
    }

    /// Projection onto two polarities: positive and discretionary merge into
    /// POSITIVE, agreement counts as POSITIVE. Relative labels have no
    /// polarity.
    pub fn binarize(self) -> Option<Polarity> {
        match self {
            ClassLabel::Positive | ClassLabel::Discretionary | ClassLabel::Agree => Some(Polarity::Positive),
            ClassLabel::Negative | ClassLabel::Disagree => Some(Polarity::Negative),
            ClassLabel::First | ClassLabel::Second => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Positive => "positive",
            ClassLabel::Discretionary => "discretionary",
            ClassLabel::Negative => "negative",
            ClassLabel::Agree => "agree",
            ClassLabel::Disagree => "disagree",
            ClassLabel::First => "first",
            ClassLabel::Second => "second",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let label = match s.to_ascii_lowercase().as_str() {
            "positive" | "pos" => ClassLabel::Positive,
            "discretionary" | "disc" | "neutral" => ClassLabel::Discretionary,
            "negative" | "neg" => ClassLabel::Negative,
            "agree" | "yes" => ClassLabel::Agree,
            "disagree" | "no" => ClassLabel::Disagree,
            "first" | "1" => ClassLabel::First,
            "second" | "2" => ClassLabel::Second,
            _ => return Err(ParseEnumError::new("class label", s)),
        };
        Ok(label)
    }
}

/// Binary moral polarity of a judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
    /// Only produced for open-text judgments missing from the polarity map.
    Unknown,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    SocialChem,
    Ethics,
    MoralStories,
    Sbic,
    Scruples,
}

impl Source {
    pub const ALL: [Source; 5] = [
        Source::SocialChem,
        Source::Ethics,
        Source::MoralStories,
        Source::Sbic,
        Source::Scruples,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::SocialChem => "social_chem",
            Source::Ethics => "ethics",
            Source::MoralStories => "moral_stories",
            Source::Sbic => "sbic",
            Source::Scruples => "scruples",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| ParseEnumError::new("source", s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Surface composition of an instance: which parts (action, situation,
/// intention) it combines and whether it is phrased as a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Composition {
    A,
    QA,
    AS,
    QAS,
    ASI,
    QASI,
    PosRoT,
    NegRoT,
    Pair,
}

impl Composition {
    pub fn as_str(self) -> &'static str {
        match self {
            Composition::A => "A",
            Composition::QA => "QA",
            Composition::AS => "AS",
            Composition::QAS => "QAS",
            Composition::ASI => "ASI",
            Composition::QASI => "QASI",
            Composition::PosRoT => "PosRoT",
            Composition::NegRoT => "NegRoT",
            Composition::Pair => "Pair",
        }
    }

    pub fn is_question(self) -> bool {
        matches!(self, Composition::QA | Composition::QAS | Composition::QASI)
    }

    /// Whether `source` can produce this composition in `mode`.
    pub fn allowed_for(self, source: Source, mode: Mode) -> bool {
        match (mode, self) {
            (Mode::Relative, Composition::Pair) => source == Source::Scruples,
            (Mode::YesNo, Composition::PosRoT | Composition::NegRoT) => source == Source::SocialChem,
            (Mode::FreeForm, Composition::A | Composition::QA) => source != Source::Scruples,
            (Mode::FreeForm, Composition::AS | Composition::QAS) => {
                matches!(source, Source::SocialChem | Source::MoralStories)
            }
            (Mode::FreeForm, Composition::ASI | Composition::QASI) => source == Source::MoralStories,
            _ => false,
        }
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Model query text: a single situation or statement, or an ordered pair of
/// actions for the relative mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Query {
    Single(String),
    Pair { first: String, second: String },
}

impl Query {
    pub fn single(text: impl Into<String>) -> Self {
        Query::Single(text.into())
    }

    pub fn pair(first: impl Into<String>, second: impl Into<String>) -> Self {
        Query::Pair {
            first: first.into(),
            second: second.into(),
        }
    }

    /// All text of the query, pair members joined by a space.
    pub fn text(&self) -> String {
        match self {
            Query::Single(text) => text.clone(),
            Query::Pair { first, second } => format!("{first} {second}"),
        }
    }

    fn is_blank(&self) -> bool {
        match self {
            Query::Single(text) => text.trim().is_empty(),
            Query::Pair { first, second } => first.trim().is_empty() || second.trim().is_empty(),
        }
    }
}

/// One unified example.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QAInstance {
    /// Stable instance ID: `<record id>/<variant>`.
    pub id: String,
    /// Stable ID of the source record this instance was derived from.
    pub record_id: String,
    pub mode: Mode,
    pub query: Query,
    pub class: ClassLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_judgment: Option<String>,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    pub composition: Composition,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("instance {id}: input is empty")]
    EmptyInput { id: String },
    #[error("instance {id}: class {class} does not belong to mode {mode}")]
    ClassModeMismatch { id: String, class: ClassLabel, mode: Mode },
    #[error("instance {id}: open-text judgment must be present iff mode is not relative")]
    JudgmentPresence { id: String },
    #[error("instance {id}: composition {composition} is not produced by {source_name} in {mode} mode")]
    Composition {
        id: String,
        composition: Composition,
        source_name: Source,
        mode: Mode,
    },
    #[error("instance {id}: query shape does not match mode {mode}")]
    QueryShape { id: String, mode: Mode },
}

impl QAInstance {
    /// Checks every structural invariant of an instance.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let id = || self.id.clone();
        if self.query.is_blank() {
            return Err(InstanceError::EmptyInput { id: id() });
        }
        let pair = matches!(self.query, Query::Pair { .. });
        if pair != (self.mode == Mode::Relative) {
            return Err(InstanceError::QueryShape {
                id: id(),
                mode: self.mode,
            });
        }
        if self.class.mode() != self.mode {
            return Err(InstanceError::ClassModeMismatch {
                id: id(),
                class: self.class,
                mode: self.mode,
            });
        }
        let has_text = self.text_judgment.as_deref().is_some_and(|t| !t.trim().is_empty());
        let judgment_ok = match self.mode {
            Mode::Relative => self.text_judgment.is_none(),
            Mode::FreeForm | Mode::YesNo => has_text,
        };
        if !judgment_ok {
            return Err(InstanceError::JudgmentPresence { id: id() });
        }
        if !self.composition.allowed_for(self.source, self.mode) {
            return Err(InstanceError::Composition {
                id: id(),
                composition: self.composition,
                source_name: self.source,
                mode: self.mode,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{value}`")]
pub struct ParseEnumError {
    kind: &'static str,
    value: String,
}

impl ParseEnumError {
    pub(crate) fn new(kind: &'static str, value: &str) -> Self {
        Self {
            kind,
            value: value.to_string(),
        }
    }
}
