//! Open-text judgment normalization and the judgment-to-polarity map.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::seed::sha256_hex;
use crate::types::Polarity;

/// The map shipped with the crate.
pub const DEFAULT_MAP_TSV: &str = include_str!("../data/polarity_map.tsv");

#[derive(Debug, Error)]
pub enum PolarityError {
    #[error("empty judgment")]
    EmptyJudgment,
    #[error("polarity map line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("polarity map line {line}: `{key}` already mapped to {previous}")]
    Conflict {
        line: usize,
        key: String,
        previous: Polarity,
    },
    #[error("reading polarity map {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Two-token contractions folded into one canonical form.
const CONTRACTIONS: &[(&str, &str, &str)] = &[
    ("it", "is", "it's"),
    ("that", "is", "that's"),
    ("there", "is", "there's"),
    ("you", "are", "you're"),
    ("they", "are", "they're"),
    ("we", "are", "we're"),
    ("i", "am", "i'm"),
    ("should", "not", "shouldn't"),
    ("can", "not", "can't"),
    ("do", "not", "don't"),
    ("does", "not", "doesn't"),
    ("is", "not", "isn't"),
    ("are", "not", "aren't"),
];

const SINGLE_CONTRACTIONS: &[(&str, &str)] = &[("cannot", "can't")];

fn is_terminal_punct(c: char) -> bool {
    c.is_ascii_punctuation() && c != '\'' || matches!(c, '…' | '。' | '！' | '？' | '“' | '”' | '‘')
}

/// Canonicalizes an open-text judgment for polarity lookup.
///
/// Lowercases, strips terminal punctuation, folds contractions and collapses
/// whitespace. The result is a fixed point: normalizing it again returns it
/// unchanged.
pub fn normalize_judgment(raw: &str) -> Result<String, PolarityError> {
    let lowered = raw.to_lowercase().replace('’', "'");
    let stripped = lowered.trim_end_matches(|c: char| c.is_whitespace() || is_terminal_punct(c));
    let tokens: Vec<&str> = stripped.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(PolarityError::EmptyJudgment);
    }

    let mut out: Vec<&str> = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let pair = tokens.get(i + 1).and_then(|next| {
            CONTRACTIONS
                .iter()
                .find(|(a, b, _)| *a == tokens[i] && b == next)
                .map(|(_, _, joined)| *joined)
        });
        if let Some(joined) = pair {
            out.push(joined);
            i += 2;
            continue;
        }
        let single = SINGLE_CONTRACTIONS
            .iter()
            .find(|(from, _)| *from == tokens[i])
            .map(|(_, to)| *to);
        out.push(single.unwrap_or(tokens[i]));
        i += 1;
    }
    Ok(out.join(" "))
}

/// Read-only mapping from normalized judgments to polarity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarityMap {
    entries: BTreeMap<String, Polarity>,
    origin: String,
}

impl PolarityMap {
    /// The map bundled with the crate.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_MAP_TSV, "builtin").expect("bundled polarity map is valid")
    }

    pub fn load(path: &Path) -> Result<Self, PolarityError> {
        let text = fs::read_to_string(path).map_err(|source| PolarityError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses `judgment<TAB>POS|NEG` lines; `#` starts a comment line.
    pub fn parse(text: &str, origin: &str) -> Result<Self, PolarityError> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (judgment, tag) = line.split_once('\t').ok_or_else(|| PolarityError::Malformed {
                line: line_no,
                reason: "expected `judgment<TAB>POS|NEG`".into(),
            })?;
            let polarity = match tag.trim() {
                "POS" => Polarity::Positive,
                "NEG" => Polarity::Negative,
                other => {
                    return Err(PolarityError::Malformed {
                        line: line_no,
                        reason: format!("polarity must be POS or NEG, got `{other}`"),
                    })
                }
            };
            let key = normalize_judgment(judgment).map_err(|_| PolarityError::Malformed {
                line: line_no,
                reason: "empty judgment".into(),
            })?;
            match entries.get(&key) {
                Some(&previous) if previous != polarity => {
                    return Err(PolarityError::Conflict {
                        line: line_no,
                        key,
                        previous,
                    })
                }
                _ => {
                    entries.insert(key, polarity);
                }
            }
        }
        Ok(Self {
            entries,
            origin: origin.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn get(&self, normalized: &str) -> Option<Polarity> {
        self.entries.get(normalized).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, Polarity)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Content hash over the normalized entries, independent of file layout.
    pub fn fingerprint(&self) -> String {
        let mut canonical = String::new();
        for (key, polarity) in &self.entries {
            canonical.push_str(key);
            canonical.push('\t');
            canonical.push_str(match polarity {
                Polarity::Positive => "POS",
                _ => "NEG",
            });
            canonical.push('\n');
        }
        sha256_hex(canonical)
    }

    /// Fraction of `judgments` whose normalized form is in the map.
    pub fn coverage<'a>(&self, judgments: impl IntoIterator<Item = &'a str>) -> (usize, usize) {
        let mut hit = 0;
        let mut total = 0;
        for judgment in judgments {
            total += 1;
            if polarity_of(judgment, self) != Polarity::Unknown {
                hit += 1;
            }
        }
        (hit, total)
    }
}

/// Polarity of an open-text judgment; `Unknown` when it is not in the map.
pub fn polarity_of(judgment: &str, map: &PolarityMap) -> Polarity {
    normalize_judgment(judgment)
        .ok()
        .and_then(|key| map.get(&key))
        .unwrap_or(Polarity::Unknown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_judgment("It's good.").unwrap(), "it's good");
        assert_eq!(normalize_judgment("it is rude").unwrap(), "it's rude");
        assert_eq!(normalize_judgment("it's good").unwrap(), "it's good");
        assert_eq!(normalize_judgment("  You   should NOT !").unwrap(), "you shouldn't");
        assert_eq!(normalize_judgment("It’s okay").unwrap(), "it's okay");
    }

    #[test]
    fn normalize_empty_is_an_error() {
        assert!(matches!(normalize_judgment(""), Err(PolarityError::EmptyJudgment)));
        assert!(matches!(normalize_judgment(" ?! "), Err(PolarityError::EmptyJudgment)));
    }

    #[test]
    fn polarity_examples() {
        let map = PolarityMap::builtin();
        assert_eq!(polarity_of("It's good", &map), Polarity::Positive);
        assert_eq!(polarity_of("It's rude", &map), Polarity::Negative);
        assert_eq!(polarity_of("flibbertigibbet", &map), Polarity::Unknown);
        assert_eq!(polarity_of("It is ok.", &map), Polarity::Positive);
    }

    #[test]
    fn builtin_keys_are_normalized_and_never_unknown() {
        let map = PolarityMap::builtin();
        assert!(map.len() > 80);
        for (key, polarity) in map.entries() {
            assert_eq!(normalize_judgment(key).unwrap(), key);
            assert_ne!(polarity, Polarity::Unknown);
        }
    }

    #[test]
    fn parse_rejects_conflicts_and_bad_tags() {
        let err = PolarityMap::parse("it's ok\tPOS\nIt is OK.\tNEG\n", "t").unwrap_err();
        assert!(matches!(err, PolarityError::Conflict { line: 2, .. }));
        let err = PolarityMap::parse("it's ok\tMAYBE\n", "t").unwrap_err();
        assert!(matches!(err, PolarityError::Malformed { line: 1, .. }));
        let err = PolarityMap::parse("no tab here\n", "t").unwrap_err();
        assert!(matches!(err, PolarityError::Malformed { line: 1, .. }));
    }

    #[test]
    fn fingerprint_ignores_layout() {
        let a = PolarityMap::parse("# c\nit's ok\tPOS\nit's bad\tNEG\n", "a").unwrap();
        let b = PolarityMap::parse("It's bad.\tNEG\n\nit is ok\tPOS\n", "b").unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "\\PC{0,40}") {
            if let Ok(once) = normalize_judgment(&raw) {
                prop_assert_eq!(normalize_judgment(&once).unwrap(), once);
            }
        }

        #[test]
        fn normalize_is_idempotent_on_judgment_like_text(
            words in proptest::collection::vec(
                prop_oneof![
                    Just("it"), Just("is"), Just("It"), Just("IS"), Just("not"), Just("should"),
                    Just("can"), Just("cannot"), Just("you"), Just("are"), Just("okay."), Just("rude!"),
                    Just("good"), Just(" "), Just("?")
                ],
                1..8,
            )
        ) {
            let raw = words.join(" ");
            if let Ok(once) = normalize_judgment(&raw) {
                prop_assert_eq!(normalize_judgment(&once).unwrap(), once);
            }
        }
    }
}
