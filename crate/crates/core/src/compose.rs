//! Keyword-based detection of compositional situations and seeded
//! subsampling for data-scale ablations.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::index;
use thiserror::Error;

use crate::seed::keyed_rng;
use crate::types::QAInstance;

pub const DEFAULT_KEYWORDS: &str = include_str!("../data/compositional_keywords.txt");

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("reading keywords {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("keyword `{0}` must be a single lowercase word")]
    BadKeyword(String),
    #[error("keyword list is empty")]
    NoKeywords,
    #[error("fraction must lie in (0, 1], got {0}")]
    Fraction(f64),
}

/// Lowercase whole-token keywords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    keywords: BTreeSet<String>,
}

impl KeywordSet {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_KEYWORDS).expect("bundled keyword list is valid")
    }

    /// Comma- or newline-separated keywords; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, ComposeError> {
        let mut keywords = BTreeSet::new();
        for line in text.lines().filter(|l| !l.trim_start().starts_with('#')) {
            for raw in line.split(',') {
                let word = raw.trim();
                if word.is_empty() {
                    continue;
                }
                if tokenize(word) != [word] {
                    return Err(ComposeError::BadKeyword(word.to_string()));
                }
                keywords.insert(word.to_string());
            }
        }
        if keywords.is_empty() {
            return Err(ComposeError::NoKeywords);
        }
        Ok(Self { keywords })
    }

    pub fn load(path: &Path) -> Result<Self, ComposeError> {
        let text = fs::read_to_string(path).map_err(|source| ComposeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.keywords.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(String::as_str)
    }
}

/// Lowercase tokens: apostrophes are dropped, other punctuation separates
/// tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| !matches!(c, '\'' | '’'))
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(str::to_lowercase).collect()
}

/// Whether any keyword occurs in `text` as a whole token.
pub fn is_compositional(text: &str, kw: &KeywordSet) -> bool {
    tokenize(text).iter().any(|t| kw.contains(t))
}

/// Splits instances into base (non-compositional) and compositional ones by
/// their query text, preserving order within each side.
pub fn partition_base(instances: Vec<QAInstance>, kw: &KeywordSet) -> (Vec<QAInstance>, Vec<QAInstance>) {
    instances
        .into_iter()
        .partition(|i| !is_compositional(&i.query.text(), kw))
}

/// Seeded sample without replacement of `round(fraction * n)` items, kept in
/// input order.
pub fn sample_fraction<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<Vec<T>, ComposeError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ComposeError::Fraction(fraction));
    }
    let n = items.len();
    let k = ((fraction * n as f64).round() as usize).min(n);
    let mut picked = index::sample(&mut keyed_rng(seed, "sample"), n, k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| items[i].clone()).collect())
}
