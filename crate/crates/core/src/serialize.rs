//! Model input and target sequences.
//!
//! Inputs carry a task prefix; targets carry a class block and, outside the
//! relative mode, a text block:
//!
//! ```text
//! [moral_single]: helping a friend
//! [moral_pair]: <action1>a1</action1> <action2>a2</action2>
//! <class> -1 </class> <text> it's rude </text>          (classic)
//! [class] 0 [/class] [text] it's rude [/text]           (plus)
//! ```
//!
//! Classic class integers are 1/0/-1 for positive/discretionary/negative,
//! 1/-1 for agree/disagree and 1/2 for first/second. Plus shifts every
//! integer up by one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scorer::Verdict;
use crate::types::{ClassLabel, Mode, ParseEnumError, QAInstance, Query};

pub const SINGLE_PREFIX: &str = "[moral_single]: ";
pub const PAIR_PREFIX: &str = "[moral_pair]: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireFormat {
    #[default]
    Classic,
    Plus,
}

impl WireFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            WireFormat::Classic => "classic",
            WireFormat::Plus => "plus",
        }
    }

    fn tags(self) -> Tags {
        match self {
            WireFormat::Classic => Tags {
                class_open: "<class>",
                class_close: "</class>",
                text_open: "<text>",
                text_close: "</text>",
            },
            WireFormat::Plus => Tags {
                class_open: "[class]",
                class_close: "[/class]",
                text_open: "[text]",
                text_close: "[/text]",
            },
        }
    }

    fn action_tags(self, n: u8) -> (String, String) {
        match self {
            WireFormat::Classic => (format!("<action{n}>"), format!("</action{n}>")),
            WireFormat::Plus => (format!("[action{n}]"), format!("[/action{n}]")),
        }
    }

    /// Class integer of `label` in this format.
    pub fn class_code(self, label: ClassLabel) -> i32 {
        match self {
            WireFormat::Classic => label.classic_code(),
            WireFormat::Plus => label.classic_code() + 1,
        }
    }

    pub fn label_for_code(self, mode: Mode, code: i32) -> Option<ClassLabel> {
        let classic = match self {
            WireFormat::Classic => code,
            WireFormat::Plus => code.checked_sub(1)?,
        };
        ClassLabel::from_classic_code(mode, classic)
    }
}

impl fmt::Display for WireFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WireFormat {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "classic" => Ok(WireFormat::Classic),
            "plus" => Ok(WireFormat::Plus),
            _ => Err(ParseEnumError::new("wire format", s)),
        }
    }
}

struct Tags {
    class_open: &'static str,
    class_close: &'static str,
    text_open: &'static str,
    text_close: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("instance {id}: {mode} target needs an open-text judgment")]
    MissingJudgment { id: String, mode: Mode },
    #[error("instance {id}: relative target cannot carry an open-text judgment")]
    UnexpectedJudgment { id: String },
    #[error("instance {id}: class {class} does not belong to mode {mode}")]
    ClassMode { id: String, class: ClassLabel, mode: Mode },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

fn parse_error(position: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        position,
        message: message.into(),
    }
}

/// Keeps sequences on one line: line breaks and tabs become spaces, outer
/// whitespace is trimmed.
fn one_line(text: &str) -> String {
    text.replace(['\n', '\r', '\t'], " ").trim().to_string()
}

/// Encodes a query with its task prefix.
pub fn encode_query(query: &Query, f: WireFormat) -> String {
    match query {
        Query::Single(text) => format!("{SINGLE_PREFIX}{}", one_line(text)),
        Query::Pair { first, second } => {
            let (o1, c1) = f.action_tags(1);
            let (o2, c2) = f.action_tags(2);
            format!("{PAIR_PREFIX}{o1}{}{c1} {o2}{}{c2}", one_line(first), one_line(second))
        }
    }
}

pub fn encode_input(i: &QAInstance, f: WireFormat) -> String {
    encode_query(&i.query, f)
}

/// Recovers the query from an encoded input. Both tag styles are accepted
/// for pairs.
pub fn decode_input(s: &str) -> Result<Query, ParseError> {
    if let Some(rest) = s.strip_prefix(SINGLE_PREFIX) {
        return Ok(Query::single(rest));
    }
    let Some(rest) = s.strip_prefix(PAIR_PREFIX) else {
        return Err(parse_error(0, "missing `[moral_single]: ` or `[moral_pair]: ` prefix"));
    };
    let base = PAIR_PREFIX.len();
    for f in [WireFormat::Classic, WireFormat::Plus] {
        let (o1, c1) = f.action_tags(1);
        let (o2, c2) = f.action_tags(2);
        if !rest.starts_with(&o1) {
            continue;
        }
        let body = &rest[o1.len()..];
        let end1 = body
            .find(&c1)
            .ok_or_else(|| parse_error(base + o1.len(), format!("missing `{c1}`")))?;
        let first = &body[..end1];
        let after = &body[end1 + c1.len()..];
        let sep = format!(" {o2}");
        let Some(second_body) = after.strip_prefix(&sep) else {
            return Err(parse_error(s.len() - after.len(), format!("expected ` {o2}`")));
        };
        let Some(second) = second_body.strip_suffix(&c2) else {
            return Err(parse_error(s.len(), format!("expected `{c2}` at end")));
        };
        return Ok(Query::pair(first, second));
    }
    Err(parse_error(base, "expected an action1 tag"))
}

/// Encodes the expected output of an instance.
pub fn encode_target(i: &QAInstance, f: WireFormat) -> Result<String, EncodeError> {
    if i.class.mode() != i.mode {
        return Err(EncodeError::ClassMode {
            id: i.id.clone(),
            class: i.class,
            mode: i.mode,
        });
    }
    let tags = f.tags();
    let class = format!("{} {} {}", tags.class_open, f.class_code(i.class), tags.class_close);
    match (i.mode, i.text_judgment.as_deref()) {
        (Mode::Relative, None) => Ok(class),
        (Mode::Relative, Some(_)) => Err(EncodeError::UnexpectedJudgment { id: i.id.clone() }),
        (_, Some(judgment)) if !judgment.trim().is_empty() => Ok(format!(
            "{class} {} {} {}",
            tags.text_open,
            one_line(judgment),
            tags.text_close
        )),
        (mode, _) => Err(EncodeError::MissingJudgment { id: i.id.clone(), mode }),
    }
}

/// Strictly parses a target sequence into a one-hot verdict.
///
/// The text block is optional outside the relative mode and forbidden in it.
pub fn decode_output(s: &str, mode: Mode, f: WireFormat) -> Result<Verdict, ParseError> {
    let tags = f.tags();
    let open = format!("{} ", tags.class_open);
    if !s.starts_with(&open) {
        return Err(parse_error(0, format!("expected `{open}`")));
    }
    let code_start = open.len();
    let close = format!(" {}", tags.class_close);
    let code_len = s[code_start..]
        .find(&close)
        .ok_or_else(|| parse_error(code_start, format!("missing `{close}`")))?;
    let code_text = &s[code_start..code_start + code_len];
    let valid_int = {
        let digits = code_text.strip_prefix('-').unwrap_or(code_text);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    let code: i32 = if valid_int { code_text.parse().ok() } else { None }
        .ok_or_else(|| parse_error(code_start, format!("`{code_text}` is not a class integer")))?;
    let class = f.label_for_code(mode, code).ok_or_else(|| {
        parse_error(
            code_start,
            format!("class integer {code} out of range for {mode} in {f} format"),
        )
    })?;

    let mut pos = code_start + code_len + close.len();
    let text = if pos == s.len() {
        None
    } else {
        let text_open = format!(" {} ", tags.text_open);
        if !s[pos..].starts_with(&text_open) {
            return Err(parse_error(
                pos,
                format!("expected `{}` or end of input", text_open.trim()),
            ));
        }
        if mode == Mode::Relative {
            return Err(parse_error(pos, "relative targets carry no text block"));
        }
        pos += text_open.len();
        let text_close = format!(" {}", tags.text_close);
        let body = s[pos..]
            .strip_suffix(&text_close)
            .ok_or_else(|| parse_error(s.len(), format!("expected `{text_close}` at end")))?;
        if body.trim().is_empty() {
            return Err(parse_error(pos, "empty text block"));
        }
        Some(body.to_string())
    };
    Ok(Verdict::one_hot(class, text))
}

/// Renders index-aligned `.src` and `.tgt` file contents.
pub fn render_split(instances: &[QAInstance], f: WireFormat) -> Result<(String, String), EncodeError> {
    let mut src = String::new();
    let mut tgt = String::new();
    for i in instances {
        src.push_str(&encode_input(i, f));
        src.push('\n');
        tgt.push_str(&encode_target(i, f)?);
        tgt.push('\n');
    }
    Ok((src, tgt))
}
