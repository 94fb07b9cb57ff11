//! Judgment-head detection and negation of rules-of-thumb.
//!
//! A rule-of-thumb starts with a judgment head, either a copula form
//! (`It's rude`, `It is kind`, `That's not okay`) or a modal form
//! (`You should`, `People can't`). Negation swaps the head's adjective or
//! modal through a fixed antonym table; adjectives missing from the table get
//! `not` inserted after the copula, and an existing `not` is removed. The rest
//! of the sentence is left byte-for-byte untouched.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NegateError {
    #[error("no judgment head recognizable in `{0}`")]
    Unnegatable(String),
}

/// Adjective antonyms; every word appears in exactly one pair so the
/// substitution is an involution.
const ADJECTIVE_ANTONYMS: &[(&str, &str)] = &[
    ("good", "bad"),
    ("okay", "wrong"),
    ("kind", "rude"),
    ("polite", "impolite"),
    ("nice", "mean"),
    ("acceptable", "unacceptable"),
    ("appropriate", "inappropriate"),
    ("responsible", "irresponsible"),
    ("fair", "unfair"),
    ("ethical", "unethical"),
    ("moral", "immoral"),
    ("helpful", "unhelpful"),
    ("considerate", "inconsiderate"),
    ("respectful", "disrespectful"),
    ("honest", "dishonest"),
    ("legal", "illegal"),
    ("selfless", "selfish"),
];

const MODAL_ANTONYMS: &[(&str, &str)] = &[
    ("should", "shouldn't"),
    ("can", "can't"),
    ("must", "mustn't"),
    ("will", "won't"),
    ("would", "wouldn't"),
    ("could", "couldn't"),
];

const COPULA_SUBJECTS: &[&str] = &["it", "that", "this", "you", "they", "we", "people", "there"];
const COPULAS: &[&str] = &["is", "are", "was", "were"];
const NEGATIVE_COPULAS: &[(&str, &str)] = &[
    ("isn't", "is"),
    ("aren't", "are"),
    ("wasn't", "was"),
    ("weren't", "were"),
];
const CONTRACTED_COPULA_SUFFIXES: &[&str] = &["'s", "'re"];

fn antonym(table: &'static [(&'static str, &'static str)], word: &str) -> Option<&'static str> {
    table.iter().find_map(|&(a, b)| {
        if a == word {
            Some(b)
        } else if b == word {
            Some(a)
        } else {
            None
        }
    })
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    start: usize,
    end: usize,
    text: &'a str,
}

impl Token<'_> {
    /// Lowercased token without surrounding punctuation, apostrophes
    /// normalized.
    fn word(&self) -> String {
        self.text
            .trim_matches(|c: char| c.is_ascii_punctuation() && c != '\'')
            .replace('’', "'")
            .to_lowercase()
    }

    /// Byte range of the bare word inside the token.
    fn word_span(&self) -> (usize, usize) {
        let lead = self.text.len()
            - self
                .text
                .trim_start_matches(|c: char| c.is_ascii_punctuation() && c != '\'')
                .len();
        let trail = self.text.len()
            - self
                .text
                .trim_end_matches(|c: char| c.is_ascii_punctuation() && c != '\'')
                .len();
        (self.start + lead, self.end - trail)
    }
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token {
                    start: s,
                    end: i,
                    text: &text[s..i],
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            start: s,
            end: text.len(),
            text: &text[s..],
        });
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum HeadKind {
    /// `subj copula [not] word`; `word` is the token index of the judgment word.
    Copula { negation: Negation, word: usize },
    /// `subj modal [not]`; `modal` is the token index of the modal.
    Modal { modal: usize, split_not: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Negation {
    None,
    /// Separate `not` token at this index.
    NotToken(usize),
    /// Contracted negative copula (`isn't`) at this index.
    Contracted(usize),
}

/// A recognized judgment head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgmentHead {
    /// Head text as written, e.g. `It's okay` or `You should`.
    pub text: String,
    kind: HeadKind,
}

impl JudgmentHead {
    /// Head as used inside a yes/no answer: lowercased, surrounding
    /// punctuation dropped and `okay` shortened to `ok`.
    pub fn answer_form(&self) -> String {
        self.text
            .split_whitespace()
            .map(|w| {
                let w = w
                    .trim_matches(|c: char| c.is_ascii_punctuation() && c != '\'')
                    .replace('’', "'")
                    .to_lowercase();
                if w == "okay" {
                    "ok".to_string()
                } else {
                    w
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn parse_head(rot: &str) -> Option<(Vec<Token<'_>>, JudgmentHead)> {
    let tokens = tokenize(rot);
    let words: Vec<String> = tokens.iter().map(Token::word).collect();
    let first = words.first()?;

    // contracted copula: it's, that's, you're ...
    let contracted = CONTRACTED_COPULA_SUFFIXES.iter().any(|suffix| {
        first
            .strip_suffix(suffix)
            .is_some_and(|subj| COPULA_SUBJECTS.contains(&subj))
    });
    let copula_end = if contracted {
        Some((0, Negation::None))
    } else if COPULA_SUBJECTS.contains(&first.as_str()) {
        words.get(1).and_then(|w| {
            if COPULAS.contains(&w.as_str()) {
                Some((1, Negation::None))
            } else if NEGATIVE_COPULAS.iter().any(|(neg, _)| neg == w) {
                Some((1, Negation::Contracted(1)))
            } else {
                None
            }
        })
    } else {
        None
    };

    if let Some((copula, mut negation)) = copula_end {
        let mut word = copula + 1;
        if negation == Negation::None && words.get(word).map(String::as_str) == Some("not") {
            negation = Negation::NotToken(word);
            word += 1;
        }
        words.get(word).filter(|w| !w.is_empty())?;
        let text = rot[tokens[0].start..tokens[word].word_span().1].to_string();
        return Some((
            tokens,
            JudgmentHead {
                text,
                kind: HeadKind::Copula { negation, word },
            },
        ));
    }

    // modal form: any single-word subject followed by a modal
    let modal_word = words.get(1)?;
    let is_modal = MODAL_ANTONYMS.iter().any(|(a, b)| a == modal_word || b == modal_word) || modal_word == "cannot";
    if !is_modal || !first.chars().all(|c| c.is_alphabetic()) {
        return None;
    }
    let split_not = words.get(2).map(String::as_str) == Some("not");
    let end_token = if split_not { 2 } else { 1 };
    let text = rot[tokens[0].start..tokens[end_token].word_span().1].to_string();
    Some((
        tokens,
        JudgmentHead {
            text,
            kind: HeadKind::Modal { modal: 1, split_not },
        },
    ))
}

/// Finds the judgment head at the start of a rule-of-thumb.
pub fn judgment_head(rot: &str) -> Option<JudgmentHead> {
    parse_head(rot).map(|(_, head)| head)
}

fn match_case(template: &str, replacement: &str) -> String {
    let upper = template.chars().next().is_some_and(char::is_uppercase);
    if upper {
        let mut chars = replacement.chars();
        match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    } else {
        replacement.to_string()
    }
}

/// Removes the token at `idx` together with the whitespace that follows it.
fn remove_token(rot: &str, tokens: &[Token<'_>], idx: usize) -> String {
    let start = tokens[idx].start;
    let end = tokens.get(idx + 1).map_or(tokens[idx].end, |next| next.start);
    format!("{}{}", &rot[..start], &rot[end..])
}

/// Negates the judgment head of a rule-of-thumb.
pub fn negate_rot(rot: &str) -> Result<String, NegateError> {
    let (tokens, head) = parse_head(rot).ok_or_else(|| NegateError::Unnegatable(rot.to_string()))?;
    let out = match head.kind {
        HeadKind::Copula {
            negation: Negation::NotToken(idx),
            ..
        } => remove_token(rot, &tokens, idx),
        HeadKind::Copula {
            negation: Negation::Contracted(idx),
            ..
        } => {
            let (s, e) = tokens[idx].word_span();
            let word = tokens[idx].word();
            let positive = NEGATIVE_COPULAS
                .iter()
                .find(|(neg, _)| *neg == word)
                .map(|(_, pos)| *pos)
                .expect("matched during parsing");
            format!("{}{}{}", &rot[..s], match_case(&rot[s..e], positive), &rot[e..])
        }
        HeadKind::Copula {
            negation: Negation::None,
            word,
        } => {
            let (s, e) = tokens[word].word_span();
            match antonym(ADJECTIVE_ANTONYMS, &tokens[word].word()) {
                Some(opposite) => {
                    format!("{}{}{}", &rot[..s], match_case(&rot[s..e], opposite), &rot[e..])
                }
                None => {
                    let at = tokens[word].start;
                    format!("{}not {}", &rot[..at], &rot[at..])
                }
            }
        }
        HeadKind::Modal { modal, split_not: true } => remove_token(rot, &tokens, modal + 1),
        HeadKind::Modal {
            modal,
            split_not: false,
        } => {
            let (s, e) = tokens[modal].word_span();
            let word = tokens[modal].word();
            let opposite = if word == "cannot" {
                "can"
            } else {
                antonym(MODAL_ANTONYMS, &word).expect("modal matched during parsing")
            };
            format!("{}{}{}", &rot[..s], match_case(&rot[s..e], opposite), &rot[e..])
        }
    };
    Ok(out)
}
