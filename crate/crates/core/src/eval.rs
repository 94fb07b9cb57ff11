//! Accuracy metrics over (prediction, gold) pairs.
//!
//! Every metric reports its exact numerator and denominator.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polarity::{polarity_of, PolarityMap};
use crate::scorer::Verdict;
use crate::types::{ClassLabel, Mode, Polarity, QAInstance};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{preds} predictions for {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("item {index}: label {label} is not a {expected} label")]
    WrongMode {
        index: usize,
        label: ClassLabel,
        expected: Mode,
    },
}

/// Correct over total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Fraction {
    pub correct: usize,
    pub total: usize,
}

impl Fraction {
    pub fn value(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    fn add(&mut self, correct: bool) {
        self.total += 1;
        if correct {
            self.correct += 1;
        }
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}% ({}/{})", 100.0 * self.value(), self.correct, self.total)
    }
}

fn check_lengths(preds: usize, golds: usize) -> Result<(), EvalError> {
    if preds != golds {
        return Err(EvalError::LengthMismatch { preds, golds });
    }
    if golds == 0 {
        return Err(EvalError::Empty);
    }
    Ok(())
}

fn check_mode(labels: &[ClassLabel], mode: Mode) -> Result<(), EvalError> {
    match labels.iter().position(|l| l.mode() != mode) {
        Some(index) => Err(EvalError::WrongMode {
            index,
            label: labels[index],
            expected: mode,
        }),
        None => Ok(()),
    }
}

fn exact_match(preds: &[ClassLabel], golds: &[ClassLabel], mode: Mode) -> Result<Fraction, EvalError> {
    check_lengths(preds.len(), golds.len())?;
    check_mode(preds, mode)?;
    check_mode(golds, mode)?;
    let mut f = Fraction::default();
    for (p, g) in preds.iter().zip(golds) {
        f.add(p == g);
    }
    Ok(f)
}

/// Three-way free-form class accuracy.
pub fn accuracy_c3(preds: &[ClassLabel], golds: &[ClassLabel]) -> Result<Fraction, EvalError> {
    exact_match(preds, golds, Mode::FreeForm)
}

/// Free-form accuracy after merging positive and discretionary.
pub fn accuracy_c2(preds: &[ClassLabel], golds: &[ClassLabel]) -> Result<Fraction, EvalError> {
    check_lengths(preds.len(), golds.len())?;
    check_mode(preds, Mode::FreeForm)?;
    check_mode(golds, Mode::FreeForm)?;
    let mut f = Fraction::default();
    for (p, g) in preds.iter().zip(golds) {
        f.add(p.binarize() == g.binarize());
    }
    Ok(f)
}

/// Open-text accuracy and how many predictions had no known polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TextAccuracy {
    pub fraction: Fraction,
    pub unknown: usize,
}

/// Polarity of each predicted judgment against the binarized gold class.
/// Unmapped predictions count as incorrect.
pub fn accuracy_text<S: AsRef<str>>(
    pred_texts: &[S],
    gold_classes: &[ClassLabel],
    map: &PolarityMap,
) -> Result<TextAccuracy, EvalError> {
    check_lengths(pred_texts.len(), gold_classes.len())?;
    check_mode(gold_classes, Mode::FreeForm)?;
    let mut out = TextAccuracy::default();
    for (text, gold) in pred_texts.iter().zip(gold_classes) {
        let polarity = polarity_of(text.as_ref(), map);
        if polarity == Polarity::Unknown {
            out.unknown += 1;
        }
        out.fraction.add(Some(polarity) == gold.binarize());
    }
    Ok(out)
}

/// Splits a yes/no answer at its first comma into a lowercased declaration
/// and the judgment. Without a comma the whole string is the declaration.
pub fn split_declaration(text: &str) -> (String, &str) {
    match text.split_once(',') {
        Some((decl, judgment)) => (decl.trim().to_lowercase(), judgment.trim()),
        None => (text.trim().to_lowercase(), ""),
    }
}

/// Yes/no answer accuracy and how many predictions could not be parsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct YesNoTextAccuracy {
    pub fraction: Fraction,
    pub unparseable: usize,
}

/// An answer is correct when its declaration equals the gold one and both
/// judgments map to the same known polarity.
pub fn accuracy_yesno_text<S: AsRef<str>, T: AsRef<str>>(
    pred_texts: &[S],
    gold_texts: &[T],
    map: &PolarityMap,
) -> Result<YesNoTextAccuracy, EvalError> {
    check_lengths(pred_texts.len(), gold_texts.len())?;
    let mut out = YesNoTextAccuracy::default();
    for (pred, gold) in pred_texts.iter().zip(gold_texts) {
        let (p_decl, p_judgment) = split_declaration(pred.as_ref());
        let (g_decl, g_judgment) = split_declaration(gold.as_ref());
        if !matches!(p_decl.as_str(), "yes" | "no") || p_judgment.is_empty() {
            out.unparseable += 1;
            out.fraction.add(false);
            continue;
        }
        let p_pol = polarity_of(p_judgment, map);
        let g_pol = polarity_of(g_judgment, map);
        out.fraction
            .add(p_decl == g_decl && p_pol != Polarity::Unknown && p_pol == g_pol);
    }
    Ok(out)
}

/// Agree/disagree class accuracy.
pub fn accuracy_yesno_class(preds: &[ClassLabel], golds: &[ClassLabel]) -> Result<Fraction, EvalError> {
    exact_match(preds, golds, Mode::YesNo)
}

/// Pair-ranking accuracy.
pub fn accuracy_relative(preds: &[ClassLabel], golds: &[ClassLabel]) -> Result<Fraction, EvalError> {
    exact_match(preds, golds, Mode::Relative)
}

/// All metrics for a mixed set of gold instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    /// Content hash of the polarity map used for the text metrics.
    pub polarity_map: String,
    pub instances: usize,
    pub c3_accuracy: Option<Fraction>,
    pub c2_accuracy: Option<Fraction>,
    pub text_polarity_accuracy: Option<Fraction>,
    pub unknown_polarity_count: usize,
    pub yesno_class_accuracy: Option<Fraction>,
    pub yesno_text_accuracy: Option<Fraction>,
    pub unparseable_yesno_count: usize,
    pub relative_accuracy: Option<Fraction>,
}

/// Scores `preds` against `golds` (index-aligned), grouping by gold mode.
pub fn evaluate(golds: &[QAInstance], preds: &[Verdict], map: &PolarityMap) -> Result<EvalReport, EvalError> {
    check_lengths(preds.len(), golds.len())?;
    let mut report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        polarity_map: map.fingerprint(),
        instances: golds.len(),
        c3_accuracy: None,
        c2_accuracy: None,
        text_polarity_accuracy: None,
        unknown_polarity_count: 0,
        yesno_class_accuracy: None,
        yesno_text_accuracy: None,
        unparseable_yesno_count: 0,
        relative_accuracy: None,
    };

    for mode in Mode::ALL {
        let pairs: Vec<(&QAInstance, &Verdict)> = golds.iter().zip(preds).filter(|(g, _)| g.mode == mode).collect();
        if pairs.is_empty() {
            continue;
        }
        let gold_classes: Vec<ClassLabel> = pairs.iter().map(|(g, _)| g.class).collect();
        let pred_classes: Vec<ClassLabel> = pairs.iter().map(|(_, p)| p.chosen).collect();
        let pred_texts: Vec<&str> = pairs
            .iter()
            .map(|(_, p)| p.text_judgment.as_deref().unwrap_or(""))
            .collect();
        match mode {
            Mode::FreeForm => {
                report.c3_accuracy = Some(accuracy_c3(&pred_classes, &gold_classes)?);
                report.c2_accuracy = Some(accuracy_c2(&pred_classes, &gold_classes)?);
                let text = accuracy_text(&pred_texts, &gold_classes, map)?;
                report.text_polarity_accuracy = Some(text.fraction);
                report.unknown_polarity_count = text.unknown;
            }
            Mode::YesNo => {
                report.yesno_class_accuracy = Some(accuracy_yesno_class(&pred_classes, &gold_classes)?);
                let gold_texts: Vec<&str> = pairs
                    .iter()
                    .map(|(g, _)| g.text_judgment.as_deref().unwrap_or(""))
                    .collect();
                let text = accuracy_yesno_text(&pred_texts, &gold_texts, map)?;
                report.yesno_text_accuracy = Some(text.fraction);
                report.unparseable_yesno_count = text.unparseable;
            }
            Mode::Relative => {
                report.relative_accuracy = Some(accuracy_relative(&pred_classes, &gold_classes)?);
            }
        }
    }
    Ok(report)
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instances: {}", self.instances)?;
        let rows = [
            ("free-form C(3)", self.c3_accuracy),
            ("free-form C(2)", self.c2_accuracy),
            ("free-form T(A)", self.text_polarity_accuracy),
            ("yes/no C(2)", self.yesno_class_accuracy),
            ("yes/no T(A)", self.yesno_text_accuracy),
            ("relative", self.relative_accuracy),
        ];
        for (name, value) in rows {
            if let Some(value) = value {
                writeln!(f, "{name:<16} {value}")?;
            }
        }
        if self.c3_accuracy.is_some() {
            writeln!(f, "unmapped free-form judgments: {}", self.unknown_polarity_count)?;
        }
        if self.yesno_class_accuracy.is_some() {
            writeln!(f, "unparseable yes/no answers: {}", self.unparseable_yesno_count)?;
        }
        write!(f, "polarity map: {}", self.polarity_map)
    }
}
