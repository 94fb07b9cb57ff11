//! Turning source records into unified question-answer instances.

mod negate;
mod noise;
mod split;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use negate::{judgment_head, negate_rot, JudgmentHead, NegateError};
pub use noise::{inflect_leading_verb, inject_noise, toggle_case, toggle_period};
pub use split::{assign_records, check_ratios, split_dataset, SplitError};

use crate::ingest::{
    is_short_scenario, ActionPairRecord, EthicsRecord, LessEthical, PostRecord, RecordData, RotRecord, SourceRecord,
    StoryRecord,
};
use crate::seed::keyed_rng;
use crate::types::{ClassLabel, Composition, Mode, QAInstance, Query, Source};
use noise::capitalize_first;

/// The configuration shipped with the crate.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../data/augment.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("noise_probability must lie in [0, 1], got {0}")]
    NoiseProbability(f64),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("missing template list `{0}`")]
    MissingTemplates(String),
    #[error("template `{template}` in `{key}`: {reason}")]
    Template {
        key: String,
        template: String,
        reason: String,
    },
    #[error("missing or empty label list `{0}`")]
    MissingLabels(String),
}

/// Augmentation settings: seed, noise rate, split ratios, surface templates
/// and hand-written judgment lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    pub seed: u64,
    pub noise_probability: f64,
    pub split: [f64; 3],
    /// `<source>.<form>` → templates with `{action}`, `{situation}` and
    /// `{intention}` slots.
    pub templates: BTreeMap<String, Vec<String>>,
    /// `<source>.<bucket>` → judgments to sample from.
    pub labels: BTreeMap<String, Vec<String>>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG_TOML).expect("bundled augment config is valid")
    }
}

/// Template and label keys every configuration must provide.
const REQUIRED_TEMPLATES: &[(Source, &[Composition])] = &[
    (
        Source::SocialChem,
        &[Composition::A, Composition::QA, Composition::AS, Composition::QAS],
    ),
    (Source::Ethics, &[Composition::A, Composition::QA]),
    (
        Source::MoralStories,
        &[
            Composition::A,
            Composition::QA,
            Composition::AS,
            Composition::QAS,
            Composition::ASI,
            Composition::QASI,
        ],
    ),
    (Source::Sbic, &[Composition::A, Composition::QA]),
];

const REQUIRED_LABELS: &[&str] = &[
    "ethics.positive",
    "ethics.negative",
    "moral_stories.positive",
    "moral_stories.negative",
    "sbic.offensive",
    "sbic.lewd",
    "sbic.benign",
];

fn form_key(form: Composition) -> &'static str {
    match form {
        Composition::A => "a",
        Composition::QA => "q_a",
        Composition::AS => "a_s",
        Composition::QAS => "q_a_s",
        Composition::ASI => "a_s_i",
        Composition::QASI => "q_a_s_i",
        Composition::PosRoT | Composition::NegRoT | Composition::Pair => "",
    }
}

fn template_key(source: Source, form: Composition) -> String {
    format!("{}.{}", source.as_str(), form_key(form))
}

/// Slots a template uses, in order of appearance.
fn template_slots(template: &str) -> Result<Vec<&str>, String> {
    let mut slots = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or("unclosed `{`")?;
        let name = &after[..close];
        if !matches!(name, "action" | "situation" | "intention") {
            return Err(format!("unknown slot `{{{name}}}`"));
        }
        slots.push(name);
        rest = &after[close + 1..];
    }
    if rest.contains('}') {
        return Err("stray `}`".into());
    }
    Ok(slots)
}

impl AugmentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: AugmentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.noise_probability) {
            return Err(ConfigError::NoiseProbability(self.noise_probability));
        }
        check_ratios(self.split)?;
        for (source, forms) in REQUIRED_TEMPLATES {
            for &form in *forms {
                let key = template_key(*source, form);
                let list = self
                    .templates
                    .get(&key)
                    .filter(|l| !l.is_empty())
                    .ok_or_else(|| ConfigError::MissingTemplates(key.clone()))?;
                let mut expected = vec!["action"];
                if matches!(
                    form,
                    Composition::AS | Composition::QAS | Composition::ASI | Composition::QASI
                ) {
                    expected.push("situation");
                }
                if matches!(form, Composition::ASI | Composition::QASI) {
                    expected.push("intention");
                }
                for template in list {
                    let err = |reason: String| ConfigError::Template {
                        key: key.clone(),
                        template: template.clone(),
                        reason,
                    };
                    let mut slots = template_slots(template).map_err(err)?;
                    slots.sort_unstable();
                    let mut want = expected.clone();
                    want.sort_unstable();
                    if slots != want {
                        return Err(err(format!("expected each of {expected:?} exactly once")));
                    }
                }
            }
        }
        for key in REQUIRED_LABELS {
            if self.labels.get(*key).is_none_or(|l| l.is_empty()) {
                return Err(ConfigError::MissingLabels((*key).to_string()));
            }
        }
        Ok(())
    }

    fn templates_for(&self, source: Source, form: Composition) -> &[String] {
        self.templates
            .get(&template_key(source, form))
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    fn label_list(&self, key: &str) -> &[String] {
        self.labels.get(key).map(Vec::as_slice).unwrap_or_default()
    }
}

/// Slot values used to render one surface form.
struct Slots<'a> {
    action: &'a str,
    situation: &'a str,
    intention: &'a str,
}

/// Drops terminal punctuation and surrounding whitespace so a sentence can be
/// embedded in a template.
fn clause(text: &str) -> &str {
    text.trim().trim_end_matches(['.', '!', '?', ';', ',']).trim_end()
}

fn render(template: &str, slots: &Slots<'_>) -> String {
    let filled = template
        .replace("{action}", clause(slots.action))
        .replace("{situation}", clause(slots.situation))
        .replace("{intention}", clause(slots.intention));
    capitalize_first(&filled)
}

/// Renders the given forms of one action, applying noise to each.
#[allow(clippy::too_many_arguments)]
fn surface_forms<R: Rng>(
    cfg: &AugmentConfig,
    rng: &mut R,
    record_id: &str,
    variant: Option<&str>,
    source: Source,
    forms: &[Composition],
    slots: &Slots<'_>,
    class: ClassLabel,
    judgment: &str,
) -> Vec<QAInstance> {
    forms
        .iter()
        .map(|&form| {
            let template = cfg
                .templates_for(source, form)
                .choose(rng)
                .expect("validated config has templates for every form");
            let text = inject_noise(&render(template, slots), cfg.noise_probability, rng);
            let id = match variant {
                Some(v) => format!("{record_id}/{v}/{form}"),
                None => format!("{record_id}/{form}"),
            };
            QAInstance {
                id,
                record_id: record_id.to_string(),
                mode: Mode::FreeForm,
                query: Query::single(text),
                class,
                text_judgment: Some(judgment.to_string()),
                source,
                split: None,
                composition: form,
            }
        })
        .collect()
}

fn sample_label<'a, R: Rng>(cfg: &'a AugmentConfig, key: &str, rng: &mut R) -> &'a str {
    cfg.label_list(key)
        .choose(rng)
        .map(String::as_str)
        .expect("validated config has every label list")
}

/// Free-form instances of a rule-of-thumb record: A and Q(A), plus A+S and
/// Q(A+S) when a situation is present.
pub fn unify_social_chem(record_id: &str, r: &RotRecord, cfg: &AugmentConfig) -> Vec<QAInstance> {
    let mut rng = keyed_rng(cfg.seed, record_id);
    let forms: &[Composition] = if r.situation.trim().is_empty() {
        &[Composition::A, Composition::QA]
    } else {
        &[Composition::A, Composition::QA, Composition::AS, Composition::QAS]
    };
    let slots = Slots {
        action: &r.action,
        situation: &r.situation,
        intention: "",
    };
    surface_forms(
        cfg,
        &mut rng,
        record_id,
        None,
        Source::SocialChem,
        forms,
        &slots,
        r.class,
        &r.judgment,
    )
}

/// Twelve free-form instances of a story: six forms for each of the moral
/// (Positive) and immoral (Negative) actions.
pub fn unify_moral_stories(record_id: &str, r: &StoryRecord, cfg: &AugmentConfig) -> Vec<QAInstance> {
    const FORMS: [Composition; 6] = [
        Composition::A,
        Composition::QA,
        Composition::AS,
        Composition::QAS,
        Composition::ASI,
        Composition::QASI,
    ];
    let mut rng = keyed_rng(cfg.seed, record_id);
    let mut out = Vec::with_capacity(12);
    for (variant, action, class, labels) in [
        ("moral", &r.moral_action, ClassLabel::Positive, "moral_stories.positive"),
        (
            "immoral",
            &r.immoral_action,
            ClassLabel::Negative,
            "moral_stories.negative",
        ),
    ] {
        let judgment = sample_label(cfg, labels, &mut rng).to_string();
        let slots = Slots {
            action,
            situation: &r.situation,
            intention: &r.intention,
        };
        out.extend(surface_forms(
            cfg,
            &mut rng,
            record_id,
            Some(variant),
            Source::MoralStories,
            &FORMS,
            &slots,
            class,
            &judgment,
        ));
    }
    out
}

/// A and Q(A) instances of an ETHICS scenario with a sampled judgment.
pub fn unify_ethics(record_id: &str, r: &EthicsRecord, cfg: &AugmentConfig) -> Vec<QAInstance> {
    let mut rng = keyed_rng(cfg.seed, record_id);
    let labels = if r.class == ClassLabel::Negative {
        "ethics.negative"
    } else {
        "ethics.positive"
    };
    let judgment = sample_label(cfg, labels, &mut rng).to_string();
    let slots = Slots {
        action: &r.scenario,
        situation: "",
        intention: "",
    };
    surface_forms(
        cfg,
        &mut rng,
        record_id,
        None,
        Source::Ethics,
        &[Composition::A, Composition::QA],
        &slots,
        r.class,
        &judgment,
    )
}

/// Saying/posting instances of a social-media post. Offensive or lewd posts
/// are Negative, others Discretionary.
pub fn unify_sbic(record_id: &str, r: &PostRecord, cfg: &AugmentConfig) -> Vec<QAInstance> {
    let mut rng = keyed_rng(cfg.seed, record_id);
    let (class, labels) = if r.offensive {
        (ClassLabel::Negative, "sbic.offensive")
    } else if r.lewd {
        (ClassLabel::Negative, "sbic.lewd")
    } else {
        (ClassLabel::Discretionary, "sbic.benign")
    };
    let judgment = sample_label(cfg, labels, &mut rng).to_string();
    let slots = Slots {
        action: &r.post,
        situation: "",
        intention: "",
    };
    surface_forms(
        cfg,
        &mut rng,
        record_id,
        None,
        Source::Sbic,
        &[Composition::A, Composition::QA],
        &slots,
        class,
        &judgment,
    )
}

/// Agreeing and disagreeing yes/no instances of a rule-of-thumb.
///
/// The answer repeats the original judgment head after `yes`/`no`; the
/// declaration is capitalized when the rule-of-thumb is.
pub fn make_yesno(record_id: &str, r: &RotRecord, cfg: &AugmentConfig) -> Result<[QAInstance; 2], NegateError> {
    let head = judgment_head(&r.rot_text).ok_or_else(|| NegateError::Unnegatable(r.rot_text.clone()))?;
    let negated = negate_rot(&r.rot_text)?;
    let mut rng = keyed_rng(cfg.seed, &format!("{record_id}#yesno"));
    let capital = r.rot_text.chars().next().is_some_and(char::is_uppercase);
    let answer = head.answer_form();
    let (yes, no) = if capital { ("Yes", "No") } else { ("yes", "no") };

    let build = |form: Composition, text: String, class: ClassLabel, decl: &str| QAInstance {
        id: format!("{record_id}/{form}"),
        record_id: record_id.to_string(),
        mode: Mode::YesNo,
        query: Query::single(text),
        class,
        text_judgment: Some(format!("{decl}, {answer}")),
        source: Source::SocialChem,
        split: None,
        composition: form,
    };
    let pos_text = inject_noise(r.rot_text.trim(), cfg.noise_probability, &mut rng);
    let neg_text = inject_noise(negated.trim(), cfg.noise_probability, &mut rng);
    Ok([
        build(Composition::PosRoT, pos_text, ClassLabel::Agree, yes),
        build(Composition::NegRoT, neg_text, ClassLabel::Disagree, no),
    ])
}

/// Relative instance of an action pair; the class names the more acceptable
/// action.
pub fn make_relative(record_id: &str, r: &ActionPairRecord) -> QAInstance {
    let class = match r.less_ethical {
        LessEthical::First => ClassLabel::Second,
        LessEthical::Second => ClassLabel::First,
    };
    QAInstance {
        id: format!("{record_id}/{}", Composition::Pair),
        record_id: record_id.to_string(),
        mode: Mode::Relative,
        query: Query::pair(r.action1.trim(), r.action2.trim()),
        class,
        text_judgment: None,
        source: Source::Scruples,
        split: None,
        composition: Composition::Pair,
    }
}

/// Result of unifying one source record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Unified {
    Instances {
        instances: Vec<QAInstance>,
        /// Set when the yes/no pair of a rule-of-thumb was skipped because
        /// its judgment head could not be negated.
        unnegatable: bool,
    },
    /// ETHICS scenario longer than two sentences.
    FilteredLong,
}

/// Unifies any source record into all instances it yields.
pub fn unify_record(record: &SourceRecord, cfg: &AugmentConfig) -> Unified {
    let id = record.id.as_str();
    let (instances, unnegatable) = match &record.data {
        RecordData::Rot(r) => {
            let mut instances = unify_social_chem(id, r, cfg);
            let unnegatable = match make_yesno(id, r, cfg) {
                Ok(pair) => {
                    instances.extend(pair);
                    false
                }
                Err(NegateError::Unnegatable(_)) => true,
            };
            (instances, unnegatable)
        }
        RecordData::Ethics(r) => {
            if !is_short_scenario(&r.scenario) {
                return Unified::FilteredLong;
            }
            (unify_ethics(id, r, cfg), false)
        }
        RecordData::Story(r) => (unify_moral_stories(id, r, cfg), false),
        RecordData::Post(r) => (unify_sbic(id, r, cfg), false),
        RecordData::ActionPair(r) => (vec![make_relative(id, r)], false),
    };
    Unified::Instances { instances, unnegatable }
}
