//! Deterministic keyword baseline.
//!
//! Each token is checked against small positive and negative stem lists. A
//! negator (`not`, `never`, `don't`, ...) flips the polarity of the next
//! keyword within four tokens. The tally maps to class scores through a
//! softmax over `1.5 * hits` with a small constant logit for the neutral
//! class, so text without keywords leans discretionary.

use std::collections::BTreeMap;

use crate::polarity::{polarity_of, PolarityMap};
use crate::scorer::{Scorer, ScorerError, Verdict};
use crate::serialize::decode_input;
use crate::types::{ClassLabel, Mode, Polarity, Query};
use crate::unify::{judgment_head, negate_rot};

/// Matched as prefixes of a token.
const POSITIVE_STEMS: &[&str] = &[
    "help",
    "thank",
    "protect",
    "donat",
    "volunteer",
    "support",
    "forgiv",
    "rescu",
    "respect",
    "compliment",
    "encourag",
    "comfort",
    "apologi",
    "hug",
    "welcom",
    "adopt",
    "recycl",
    "generous",
    "kindness",
    "honest",
    "celebrat",
    "equal",
    "freedom",
    "free",
    "educat",
    "assist",
];
/// Matched as whole tokens.
const POSITIVE_WORDS: &[&str] = &[
    "save", "saved", "saving", "share", "shared", "sharing", "love", "loved", "loving", "care", "cared", "caring",
    "kind", "nice", "good", "feed", "feeding", "fed", "tip", "tipping", "teach", "teaching", "right", "rights", "safe",
    "safety", "vote", "votes", "voting", "marry", "work", "justice", "fair",
];
const NEGATIVE_STEMS: &[&str] = &[
    "kill",
    "murder",
    "steal",
    "stole",
    "hate",
    "hatred",
    "hurt",
    "cheat",
    "abus",
    "tortur",
    "enslav",
    "slave",
    "servitude",
    "punish",
    "attack",
    "arrest",
    "detain",
    "exile",
    "depriv",
    "denied",
    "deny",
    "insult",
    "harm",
    "bully",
    "bulli",
    "destroy",
    "betray",
    "abandon",
    "fake",
    "cruel",
    "degrad",
    "arbitrar",
    "assault",
    "rape",
    "racis",
    "sexis",
    "offens",
    "mock",
    "threat",
    "poison",
    "shoot",
    "stab",
    "punch",
    "vandal",
    "harass",
    "discriminat",
    "ignor",
    "neglect",
    "humiliat",
    "yell",
    "scream",
    "spit",
    "litter",
    "drunk",
    "smash",
    "kidnap",
    "blackmail",
    "manipulat",
    "exploit",
    "torment",
    "interfer",
    "inhuman",
    "fraud",
    "brib",
    "gossip",
    "sabotag",
];
const NEGATIVE_WORDS: &[&str] = &[
    "lie", "lied", "lies", "lying", "rob", "robbed", "robbing", "robbery", "beat", "beating", "rude", "bad", "wrong",
    "evil", "mean", "hit", "hitting", "slap", "slapping", "kick", "kicking", "war", "drugs", "crime", "prison", "jail",
];
const NEGATORS: &[&str] = &[
    "not",
    "never",
    "no",
    "without",
    "cannot",
    "don't",
    "doesn't",
    "didn't",
    "isn't",
    "aren't",
    "wasn't",
    "won't",
    "can't",
    "shouldn't",
    "mustn't",
    "wouldn't",
    "couldn't",
    "haven't",
    "hasn't",
    "refuse",
    "refusing",
    "refused",
    "stop",
    "stopping",
    "avoid",
    "avoiding",
    "prevent",
    "preventing",
];
const NEGATION_SCOPE: usize = 4;
const KEYWORD_WEIGHT: f64 = 1.5;
const NEUTRAL_LOGIT: f64 = 0.25;

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace('’', "'")
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\'').to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

fn keyword_polarity(token: &str) -> Option<Polarity> {
    if NEGATIVE_WORDS.contains(&token) || NEGATIVE_STEMS.iter().any(|s| token.starts_with(s)) {
        return Some(Polarity::Negative);
    }
    if POSITIVE_WORDS.contains(&token) || POSITIVE_STEMS.iter().any(|s| token.starts_with(s)) {
        return Some(Polarity::Positive);
    }
    None
}

/// Positive and negative keyword counts after negation flips.
fn tally(text: &str) -> (u32, u32) {
    let mut pos = 0;
    let mut neg = 0;
    let mut scope = 0usize;
    for token in tokens(text) {
        if NEGATORS.contains(&token.as_str()) {
            scope = NEGATION_SCOPE;
            continue;
        }
        let Some(mut polarity) = keyword_polarity(&token) else {
            scope = scope.saturating_sub(1);
            continue;
        };
        if scope > 0 {
            polarity = match polarity {
                Polarity::Positive => Polarity::Negative,
                _ => Polarity::Positive,
            };
            scope = 0;
        }
        match polarity {
            Polarity::Positive => pos += 1,
            _ => neg += 1,
        }
    }
    (pos, neg)
}

fn softmax(logits: &[(ClassLabel, f64)]) -> BTreeMap<ClassLabel, f64> {
    let max = logits.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<(ClassLabel, f64)> = logits.iter().map(|(c, l)| (*c, (l - max).exp())).collect();
    let sum: f64 = exps.iter().map(|(_, e)| e).sum();
    exps.into_iter().map(|(c, e)| (c, e / sum)).collect()
}

/// Keyword-tally backend. Pure: identical inputs give identical verdicts.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    map: PolarityMap,
}

impl Default for LexiconScorer {
    fn default() -> Self {
        Self::new()
    }
}

impl LexiconScorer {
    pub fn new() -> Self {
        Self {
            map: PolarityMap::builtin(),
        }
    }

    fn free_form(&self, text: &str) -> Verdict {
        let (pos, neg) = tally(text);
        let scores = softmax(&[
            (ClassLabel::Negative, KEYWORD_WEIGHT * f64::from(neg)),
            (ClassLabel::Discretionary, NEUTRAL_LOGIT),
            (ClassLabel::Positive, KEYWORD_WEIGHT * f64::from(pos)),
        ]);
        let mut verdict = Verdict::from_scores(Mode::FreeForm, scores, None).expect("softmax is a distribution");
        verdict.text_judgment = Some(
            match verdict.chosen {
                ClassLabel::Positive => "it's good",
                ClassLabel::Negative => "it's wrong",
                _ => "it's okay",
            }
            .to_string(),
        );
        verdict
    }

    fn yes_no(&self, statement: &str) -> Verdict {
        let head = judgment_head(statement);
        let head_polarity = head
            .as_ref()
            .map(|h| polarity_of(&h.text, &self.map))
            .unwrap_or(Polarity::Unknown);

        let (agree, strength, yes_text, no_text) = match (&head, head_polarity) {
            (Some(head), Polarity::Positive | Polarity::Negative) => {
                let start = statement.find(&head.text).unwrap_or(0) + head.text.len();
                let clause = &statement[start..];
                let (pos, neg) = tally(clause);
                let action = if neg > pos {
                    Polarity::Negative
                } else {
                    Polarity::Positive
                };
                let no_head = negate_rot(statement)
                    .ok()
                    .and_then(|n| judgment_head(&n))
                    .map(|h| h.answer_form())
                    .unwrap_or_else(|| "it's wrong".into());
                (
                    action == head_polarity,
                    1.0 + f64::from(pos.abs_diff(neg)),
                    format!("yes, {}", head.answer_form()),
                    format!("no, {no_head}"),
                )
            }
            _ => {
                let (pos, neg) = tally(statement);
                (
                    neg <= pos,
                    1.0 + f64::from(pos.abs_diff(neg)),
                    "yes, it's ok".to_string(),
                    "no, it's wrong".to_string(),
                )
            }
        };
        let (agree_logit, disagree_logit) = if agree { (strength, 0.0) } else { (0.0, strength) };
        let scores = softmax(&[(ClassLabel::Disagree, disagree_logit), (ClassLabel::Agree, agree_logit)]);
        let text = if agree { yes_text } else { no_text };
        Verdict::from_scores(Mode::YesNo, scores, Some(text)).expect("softmax is a distribution")
    }

    fn relative(&self, first: &str, second: &str) -> Verdict {
        let score = |t: &str| {
            let (pos, neg) = tally(t);
            f64::from(pos) - f64::from(neg)
        };
        let scores = softmax(&[(ClassLabel::First, score(first)), (ClassLabel::Second, score(second))]);
        Verdict::from_scores(Mode::Relative, scores, None).expect("softmax is a distribution")
    }
}

impl Scorer for LexiconScorer {
    fn judge(&self, encoded_input: &str, mode: Mode) -> Result<Verdict, ScorerError> {
        let query = decode_input(encoded_input).unwrap_or_else(|_| Query::single(encoded_input));
        Ok(match (mode, &query) {
            (Mode::Relative, Query::Pair { first, second }) => self.relative(first, second),
            (Mode::Relative, Query::Single(_)) => {
                return Err(ScorerError::Contract("relative mode needs an action pair".into()))
            }
            (Mode::YesNo, q) => self.yes_no(&q.text()),
            (Mode::FreeForm, q) => self.free_form(&q.text()),
        })
    }

    fn describe(&self) -> String {
        "lexicon".into()
    }
}
