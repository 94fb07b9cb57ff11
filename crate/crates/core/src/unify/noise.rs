//! Surface-form noise: leading-verb inflection, final-period toggle and
//! case toggle.

use rand::seq::IndexedRandom;
use rand::Rng;

/// Base, past and progressive forms of common leading verbs.
const VERB_FORMS: &[[&str; 3]] = &[
    ["eat", "ate", "eating"],
    ["go", "went", "going"],
    ["take", "took", "taking"],
    ["make", "made", "making"],
    ["give", "gave", "giving"],
    ["tell", "told", "telling"],
    ["say", "said", "saying"],
    ["get", "got", "getting"],
    ["buy", "bought", "buying"],
    ["bring", "brought", "bringing"],
    ["leave", "left", "leaving"],
    ["keep", "kept", "keeping"],
    ["steal", "stole", "stealing"],
    ["break", "broke", "breaking"],
    ["drive", "drove", "driving"],
    ["write", "wrote", "writing"],
    ["sell", "sold", "selling"],
    ["pay", "paid", "paying"],
    ["feed", "fed", "feeding"],
    ["ignore", "ignored", "ignoring"],
    ["help", "helped", "helping"],
    ["change", "changed", "changing"],
    ["ask", "asked", "asking"],
    ["call", "called", "calling"],
    ["yell", "yelled", "yelling"],
    ["use", "used", "using"],
    ["want", "wanted", "wanting"],
    ["play", "played", "playing"],
    ["clean", "cleaned", "cleaning"],
    ["mow", "mowed", "mowing"],
    ["post", "posted", "posting"],
    ["kill", "killed", "killing"],
    ["turn", "turned", "turning"],
    ["lie", "lied", "lying"],
    ["cheat", "cheated", "cheating"],
    ["refuse", "refused", "refusing"],
    ["tip", "tipped", "tipping"],
    ["donate", "donated", "donating"],
    ["borrow", "borrowed", "borrowing"],
    ["return", "returned", "returning"],
    ["throw", "threw", "throwing"],
    ["spend", "spent", "spending"],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Perturbation {
    Inflect,
    TogglePeriod,
    ToggleCase,
}

/// Perturbs `text` with probability `p`, choosing uniformly among the
/// perturbations that apply to it. `p <= 0` leaves every text unchanged.
pub fn inject_noise<R: Rng + ?Sized>(text: &str, p: f64, rng: &mut R) -> String {
    let draw: f64 = rng.random();
    if draw >= p {
        return text.to_string();
    }
    let mut options = Vec::with_capacity(3);
    if leading_verb(text).is_some() {
        options.push(Perturbation::Inflect);
    }
    if toggle_period(text).is_some() {
        options.push(Perturbation::TogglePeriod);
    }
    if toggle_case(text).is_some() {
        options.push(Perturbation::ToggleCase);
    }
    let Some(choice) = options.choose(rng) else {
        return text.to_string();
    };
    let out = match choice {
        Perturbation::Inflect => inflect_leading_verb(text, rng),
        Perturbation::TogglePeriod => toggle_period(text),
        Perturbation::ToggleCase => toggle_case(text),
    };
    out.unwrap_or_else(|| text.to_string())
}

fn leading_verb(text: &str) -> Option<(&'static [&'static str; 3], usize, usize)> {
    let end = text.find(|c: char| !c.is_alphabetic()).unwrap_or(text.len());
    let word = text[..end].to_lowercase();
    VERB_FORMS
        .iter()
        .find_map(|forms| forms.iter().position(|f| *f == word).map(|pos| (forms, pos, end)))
}

/// Replaces a known leading verb with one of its other forms.
pub fn inflect_leading_verb<R: Rng + ?Sized>(text: &str, rng: &mut R) -> Option<String> {
    let (forms, pos, end) = leading_verb(text)?;
    let others: Vec<&str> = forms
        .iter()
        .enumerate()
        .filter(|&(i, f)| i != pos && *f != forms[pos])
        .map(|(_, f)| *f)
        .collect();
    let replacement = *others.choose(rng)?;
    let capital = text.chars().next().is_some_and(char::is_uppercase);
    let replacement = if capital {
        capitalize_first(replacement)
    } else {
        replacement.to_string()
    };
    Some(format!("{replacement}{}", &text[end..]))
}

/// Removes a final period, or adds one after a final alphanumeric character.
pub fn toggle_period(text: &str) -> Option<String> {
    let last = text.chars().last()?;
    if last == '.' {
        Some(text[..text.len() - 1].to_string())
    } else if last.is_alphanumeric() {
        Some(format!("{text}."))
    } else {
        None
    }
}

/// All-lowercase text gets its first letter capitalized; anything else is
/// lowercased entirely.
pub fn toggle_case(text: &str) -> Option<String> {
    if !text.chars().any(char::is_alphabetic) {
        return None;
    }
    let lower = text.to_lowercase();
    let out = if lower == text { capitalize_first(text) } else { lower };
    (out != text).then_some(out)
}

pub(crate) fn capitalize_first(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
