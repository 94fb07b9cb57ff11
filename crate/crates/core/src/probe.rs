//! Human-rights probing across social and demographic identities.
//!
//! Every right template is crossed with every identity, judged in yes/no
//! mode, and a probe counts as an error when the binarized verdict differs
//! from the expected polarity. Rights marked as violations (`- R` in the
//! inventory) expect disagreement in the current-world phrasing; their
//! ideal-world phrasings already state the protection ("should not be held
//! in slavery") and expect agreement like every other right.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scorer::{Scorer, ScorerError, Verdict};
use crate::seed::sha256_hex;
use crate::serialize::{encode_query, WireFormat};
use crate::types::{ClassLabel, Mode, ParseEnumError, Polarity, Query};

pub const DEFAULT_RIGHTS_TSV: &str = include_str!("../data/rights.tsv");
pub const DEFAULT_IDENTITIES_TSV: &str = include_str!("../data/identities.tsv");

const SLOT: &str = "{people}";
const VIOLATION_MARKER: &str = " - R";

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("{origin} line {line}: {reason}")]
    Inventory {
        origin: String,
        line: usize,
        reason: String,
    },
    #[error("right {article} ({phrasing}): template must contain `{{people}}` exactly once")]
    Template { article: u32, phrasing: Phrasing },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: String, reason: String },
    #[error("{source} ({completed} of {total} probes judged{})",
        .checkpoint.as_ref().map(|p| format!("; progress saved to {}", p.display())).unwrap_or_default())]
    Scorer {
        #[source]
        source: ScorerError,
        completed: usize,
        total: usize,
        checkpoint: Option<PathBuf>,
    },
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> ProbeError + '_ {
    move |source| ProbeError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phrasing {
    CurrentWorld,
    IdealWorld,
}

impl Phrasing {
    pub fn as_str(self) -> &'static str {
        match self {
            Phrasing::CurrentWorld => "current",
            Phrasing::IdealWorld => "ideal",
        }
    }
}

impl fmt::Display for Phrasing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phrasing {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "current" | "current_world" | "current-world" => Ok(Phrasing::CurrentWorld),
            "ideal" | "ideal_world" | "ideal-world" => Ok(Phrasing::IdealWorld),
            _ => Err(ParseEnumError::new("phrasing", s)),
        }
    }
}

/// One human right with both phrasings; `{people}` marks the identity slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RightTemplate {
    pub article: u32,
    pub text_current: String,
    pub text_ideal: String,
    /// The current-world text describes a violation of the right.
    pub negated: bool,
}

impl RightTemplate {
    pub fn text(&self, phrasing: Phrasing) -> &str {
        match phrasing {
            Phrasing::CurrentWorld => &self.text_current,
            Phrasing::IdealWorld => &self.text_ideal,
        }
    }

    /// Polarity a fair judge gives to this right's probes.
    pub fn expected(&self, phrasing: Phrasing) -> Polarity {
        if self.negated && phrasing == Phrasing::CurrentWorld {
            Polarity::Negative
        } else {
            Polarity::Positive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityGroup {
    GenderIdentity,
    SexualOrientation,
    Personality,
    RaceEthnicity,
    Religion,
    Nationality,
    Disability,
    Appearance,
    Politics,
    ContinentOfOrigin,
    SocioeconomicStatus,
    Country,
}

impl IdentityGroup {
    pub const ALL: [IdentityGroup; 12] = [
        IdentityGroup::GenderIdentity,
        IdentityGroup::SexualOrientation,
        IdentityGroup::Personality,
        IdentityGroup::RaceEthnicity,
        IdentityGroup::Religion,
        IdentityGroup::Nationality,
        IdentityGroup::Disability,
        IdentityGroup::Appearance,
        IdentityGroup::Politics,
        IdentityGroup::ContinentOfOrigin,
        IdentityGroup::SocioeconomicStatus,
        IdentityGroup::Country,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IdentityGroup::GenderIdentity => "gender_identity",
            IdentityGroup::SexualOrientation => "sexual_orientation",
            IdentityGroup::Personality => "personality",
            IdentityGroup::RaceEthnicity => "race_ethnicity",
            IdentityGroup::Religion => "religion",
            IdentityGroup::Nationality => "nationality",
            IdentityGroup::Disability => "disability",
            IdentityGroup::Appearance => "appearance",
            IdentityGroup::Politics => "politics",
            IdentityGroup::ContinentOfOrigin => "continent_of_origin",
            IdentityGroup::SocioeconomicStatus => "socioeconomic_status",
            IdentityGroup::Country => "country",
        }
    }
}

impl fmt::Display for IdentityGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for IdentityGroup {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IdentityGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| ParseEnumError::new("identity group", s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Identity {
    pub surface: String,
    pub group: IdentityGroup,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// Parses `article<TAB>current<TAB>ideal` rows; a trailing ` - R` on the
/// current text marks a violation.
pub fn parse_rights(text: &str, origin: &str) -> Result<Vec<RightTemplate>, ProbeError> {
    let mut rights = Vec::new();
    for (line, row) in data_lines(text) {
        let bad = |reason: String| ProbeError::Inventory {
            origin: origin.to_string(),
            line,
            reason,
        };
        let fields: Vec<&str> = row.split('\t').collect();
        let [article, current, ideal] = fields[..] else {
            return Err(bad(format!("expected 3 tab-separated fields, found {}", fields.len())));
        };
        let article: u32 = article
            .trim()
            .parse()
            .map_err(|_| bad(format!("article `{article}` is not a number")))?;
        let current = current.trim();
        let (text_current, negated) = match current.strip_suffix(VIOLATION_MARKER) {
            Some(stripped) => (stripped.trim_end().to_string(), true),
            None => (current.to_string(), false),
        };
        let right = RightTemplate {
            article,
            text_current,
            text_ideal: ideal.trim().to_string(),
            negated,
        };
        for phrasing in [Phrasing::CurrentWorld, Phrasing::IdealWorld] {
            if right.text(phrasing).matches(SLOT).count() != 1 {
                return Err(ProbeError::Template { article, phrasing });
            }
        }
        rights.push(right);
    }
    Ok(rights)
}

/// Parses `group<TAB>surface` rows.
pub fn parse_identities(text: &str, origin: &str) -> Result<Vec<Identity>, ProbeError> {
    let mut identities = Vec::new();
    for (line, row) in data_lines(text) {
        let bad = |reason: String| ProbeError::Inventory {
            origin: origin.to_string(),
            line,
            reason,
        };
        let (group, surface) = row
            .split_once('\t')
            .ok_or_else(|| bad("expected `group<TAB>surface`".into()))?;
        let group = group.trim().parse().map_err(|e: ParseEnumError| bad(e.to_string()))?;
        let surface = surface.trim();
        if surface.is_empty() {
            return Err(bad("empty identity".into()));
        }
        identities.push(Identity {
            surface: surface.to_string(),
            group,
        });
    }
    Ok(identities)
}

pub fn builtin_rights() -> Vec<RightTemplate> {
    parse_rights(DEFAULT_RIGHTS_TSV, "builtin rights").expect("bundled rights inventory is valid")
}

pub fn builtin_identities() -> Vec<Identity> {
    parse_identities(DEFAULT_IDENTITIES_TSV, "builtin identities").expect("bundled identity inventory is valid")
}

pub fn load_rights(path: &Path) -> Result<Vec<RightTemplate>, ProbeError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    parse_rights(&text, &path.display().to_string())
}

pub fn load_identities(path: &Path) -> Result<Vec<Identity>, ProbeError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    parse_identities(&text, &path.display().to_string())
}

/// One (right, identity) statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RightsProbe {
    pub right_index: usize,
    pub identity_index: usize,
    pub article: u32,
    pub group: IdentityGroup,
    pub identity: String,
    pub text: String,
    /// Right text with the identity slot still open.
    pub template: String,
    pub negated: bool,
    pub expected: Polarity,
}

/// Cross product of rights and identities, right-major.
pub fn expand_probes(
    rights: &[RightTemplate],
    identities: &[Identity],
    phrasing: Phrasing,
) -> Result<Vec<RightsProbe>, ProbeError> {
    let mut probes = Vec::with_capacity(rights.len() * identities.len());
    for (ri, right) in rights.iter().enumerate() {
        let template = right.text(phrasing);
        if template.matches(SLOT).count() != 1 {
            return Err(ProbeError::Template {
                article: right.article,
                phrasing,
            });
        }
        for (ii, identity) in identities.iter().enumerate() {
            probes.push(RightsProbe {
                right_index: ri,
                identity_index: ii,
                article: right.article,
                group: identity.group,
                identity: identity.surface.clone(),
                text: template.replace(SLOT, &identity.surface),
                template: template.to_string(),
                negated: right.negated,
                expected: right.expected(phrasing),
            });
        }
    }
    Ok(probes)
}

/// Scorer that answers every probe as expected.
pub struct OracleScorer {
    answers: HashMap<String, ClassLabel>,
}

impl OracleScorer {
    pub fn new(probes: &[RightsProbe], format: WireFormat) -> Self {
        let answers = probes
            .iter()
            .map(|p| {
                let label = if p.expected == Polarity::Negative {
                    ClassLabel::Disagree
                } else {
                    ClassLabel::Agree
                };
                (encode_query(&Query::single(p.text.as_str()), format), label)
            })
            .collect();
        Self { answers }
    }
}

impl Scorer for OracleScorer {
    fn judge(&self, encoded_input: &str, mode: Mode) -> Result<Verdict, ScorerError> {
        if mode != Mode::YesNo {
            return Err(ScorerError::Contract("oracle answers yes/no probes only".into()));
        }
        let label = self
            .answers
            .get(encoded_input)
            .ok_or_else(|| ScorerError::Contract(format!("oracle has no answer for `{encoded_input}`")))?;
        Ok(Verdict::one_hot(*label, None))
    }

    fn describe(&self) -> String {
        "oracle".into()
    }
}

/// Judgment of one probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub index: usize,
    pub chosen: ClassLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    pub probes: usize,
    pub errors: usize,
    pub error_rate: f64,
}

impl ErrorStats {
    fn add(&mut self, error: bool) {
        self.probes += 1;
        if error {
            self.errors += 1;
        }
    }

    fn finish(&mut self) {
        self.error_rate = if self.probes == 0 {
            0.0
        } else {
            self.errors as f64 / self.probes as f64
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityErrors {
    pub group: IdentityGroup,
    pub identity: String,
    pub stats: ErrorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RightRow {
    pub right_index: usize,
    pub article: u32,
    pub text: String,
    /// Error flag per identity column; `None` where no probe was run.
    pub cells: Vec<Option<bool>>,
}

/// Aggregated probe errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub phrasing: Phrasing,
    pub overall: ErrorStats,
    pub per_group: BTreeMap<IdentityGroup, ErrorStats>,
    /// Identities with at least one error, most errors first.
    pub worst_identities: Vec<IdentityErrors>,
    /// Discretionary answers on violation statements. They count as errors
    /// because only disagreement rejects a described violation.
    pub discretionary_on_violations: usize,
    /// Matrix columns as `group:surface`.
    pub identity_columns: Vec<String>,
    pub rows: Vec<RightRow>,
}

impl BiasReport {
    /// Aggregates judged probes; `outcomes` may come in any order.
    pub fn from_outcomes(phrasing: Phrasing, probes: &[RightsProbe], outcomes: &[ProbeOutcome]) -> Self {
        let mut columns: BTreeMap<usize, String> = BTreeMap::new();
        let mut row_meta: BTreeMap<usize, (u32, String)> = BTreeMap::new();
        for p in probes {
            columns
                .entry(p.identity_index)
                .or_insert_with(|| format!("{}:{}", p.group, p.identity));
            row_meta
                .entry(p.right_index)
                .or_insert_with(|| (p.article, p.template.clone()));
        }
        let column_pos: HashMap<usize, usize> = columns.keys().enumerate().map(|(pos, &ii)| (ii, pos)).collect();
        let mut rows: BTreeMap<usize, RightRow> = row_meta
            .into_iter()
            .map(|(ri, (article, text))| {
                (
                    ri,
                    RightRow {
                        right_index: ri,
                        article,
                        text,
                        cells: vec![None; columns.len()],
                    },
                )
            })
            .collect();

        let mut overall = ErrorStats::default();
        let mut per_group: BTreeMap<IdentityGroup, ErrorStats> = BTreeMap::new();
        let mut per_identity: BTreeMap<usize, ErrorStats> = BTreeMap::new();
        let mut discretionary_on_violations = 0;
        for outcome in outcomes {
            let p = &probes[outcome.index];
            let error = outcome.chosen.binarize() != Some(p.expected);
            if p.expected == Polarity::Negative && outcome.chosen == ClassLabel::Discretionary {
                discretionary_on_violations += 1;
            }
            overall.add(error);
            per_group.entry(p.group).or_default().add(error);
            per_identity.entry(p.identity_index).or_default().add(error);
            if let Some(row) = rows.get_mut(&p.right_index) {
                row.cells[column_pos[&p.identity_index]] = Some(error);
            }
        }
        overall.finish();
        per_group.values_mut().for_each(ErrorStats::finish);

        let lookup: HashMap<usize, &RightsProbe> = probes.iter().map(|p| (p.identity_index, p)).collect();
        let mut worst_identities: Vec<IdentityErrors> = per_identity
            .into_iter()
            .filter(|(_, s)| s.errors > 0)
            .map(|(ii, mut stats)| {
                stats.finish();
                IdentityErrors {
                    group: lookup[&ii].group,
                    identity: lookup[&ii].identity.clone(),
                    stats,
                }
            })
            .collect();
        worst_identities.sort_by(|a, b| {
            b.stats
                .errors
                .cmp(&a.stats.errors)
                .then_with(|| a.group.cmp(&b.group))
                .then_with(|| a.identity.cmp(&b.identity))
        });

        BiasReport {
            phrasing,
            overall,
            per_group,
            worst_identities,
            discretionary_on_violations,
            identity_columns: columns.into_values().collect(),
            rows: rows.into_values().collect(),
        }
    }
}

impl fmt::Display for BiasReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} phrasing: {:.2}% error ({}/{})",
            self.phrasing,
            100.0 * self.overall.error_rate,
            self.overall.errors,
            self.overall.probes
        )?;
        for (group, stats) in &self.per_group {
            writeln!(
                f,
                "  {group:<22} {:>6.2}% ({}/{})",
                100.0 * stats.error_rate,
                stats.errors,
                stats.probes
            )?;
        }
        write!(
            f,
            "discretionary answers on violations (counted as errors): {}",
            self.discretionary_on_violations
        )
    }
}

/// Settings for [`run_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRunOptions {
    pub format: WireFormat,
    /// Probes sent to the scorer per batch call.
    pub chunk_size: usize,
    /// Progress file, appended after every chunk and read back on restart.
    pub checkpoint: Option<PathBuf>,
}

impl Default for ProbeRunOptions {
    fn default() -> Self {
        Self {
            format: WireFormat::Classic,
            chunk_size: 512,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    probe_set: String,
    phrasing: Phrasing,
}

fn probe_set_hash(probes: &[RightsProbe], format: WireFormat) -> String {
    let mut all = String::from(format.as_str());
    for p in probes {
        all.push('\n');
        all.push_str(&p.text);
    }
    sha256_hex(all)
}

fn read_checkpoint(path: &Path, header: &CheckpointHeader, total: usize) -> Result<Vec<ProbeOutcome>, ProbeError> {
    let bad = |reason: String| ProbeError::Checkpoint {
        path: path.display().to_string(),
        reason,
    };
    let file = File::open(path).map_err(io_error(path))?;
    let mut lines = BufReader::new(file).lines();
    let Some(first) = lines.next() else {
        return Ok(Vec::new());
    };
    let first = first.map_err(io_error(path))?;
    let found: CheckpointHeader = serde_json::from_str(&first).map_err(|e| bad(format!("bad header: {e}")))?;
    if found.probe_set != header.probe_set || found.phrasing != header.phrasing {
        return Err(bad("written for a different probe set".into()));
    }
    let mut outcomes = Vec::new();
    for line in lines {
        let line = line.map_err(io_error(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let outcome: ProbeOutcome = serde_json::from_str(&line).map_err(|e| bad(format!("bad entry: {e}")))?;
        if outcome.index >= total {
            return Err(bad(format!("probe index {} out of range", outcome.index)));
        }
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// Judges every probe in yes/no mode and aggregates the errors.
///
/// With a checkpoint path, progress is appended after each chunk; a later
/// run over the same probes resumes from it. A scorer failure leaves the
/// checkpoint in place and reports how far the run got.
pub fn run_probe(
    scorer: &dyn Scorer,
    probes: &[RightsProbe],
    phrasing: Phrasing,
    opts: &ProbeRunOptions,
) -> Result<BiasReport, ProbeError> {
    let header = CheckpointHeader {
        probe_set: probe_set_hash(probes, opts.format),
        phrasing,
    };
    let mut outcomes = match &opts.checkpoint {
        Some(path) if path.exists() => read_checkpoint(path, &header, probes.len())?,
        _ => Vec::new(),
    };
    let mut done = vec![false; probes.len()];
    for o in &outcomes {
        done[o.index] = true;
    }

    let mut writer = match &opts.checkpoint {
        Some(path) => {
            let fresh = !path.exists() || fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(io_error(path))?;
            if fresh {
                let line = serde_json::to_string(&header).expect("header serializes");
                writeln!(file, "{line}").map_err(io_error(path))?;
            }
            Some((path.clone(), file))
        }
        None => None,
    };

    let pending: Vec<usize> = (0..probes.len()).filter(|&i| !done[i]).collect();
    for chunk in pending.chunks(opts.chunk_size.max(1)) {
        let inputs: Vec<String> = chunk
            .iter()
            .map(|&i| encode_query(&Query::single(probes[i].text.as_str()), opts.format))
            .collect();
        let verdicts = scorer
            .judge_batch(&inputs, Mode::YesNo)
            .map_err(|source| ProbeError::Scorer {
                source,
                completed: outcomes.len(),
                total: probes.len(),
                checkpoint: opts.checkpoint.clone(),
            })?;
        if verdicts.len() != chunk.len() {
            return Err(ProbeError::Scorer {
                source: ScorerError::Contract(format!("{} verdicts for {} inputs", verdicts.len(), chunk.len())),
                completed: outcomes.len(),
                total: probes.len(),
                checkpoint: opts.checkpoint.clone(),
            });
        }
        let fresh: Vec<ProbeOutcome> = chunk
            .iter()
            .zip(verdicts)
            .map(|(&index, v)| ProbeOutcome {
                index,
                chosen: v.chosen,
            })
            .collect();
        if let Some((path, file)) = writer.as_mut() {
            let mut buf = String::new();
            for o in &fresh {
                buf.push_str(&serde_json::to_string(o).expect("outcome serializes"));
                buf.push('\n');
            }
            file.write_all(buf.as_bytes()).map_err(io_error(path))?;
            file.flush().map_err(io_error(path))?;
        }
        outcomes.extend(fresh);
    }
    outcomes.sort_by_key(|o| o.index);
    Ok(BiasReport::from_outcomes(phrasing, probes, &outcomes))
}

pub const MATRIX_FILE: &str = "bias_matrix.csv";
pub const GROUPS_FILE: &str = "bias_groups.csv";

/// Writes the right × identity error matrix and the per-group summary.
///
/// `bias_matrix.csv`: `right_index,article,right,<group:identity>...`, one row
/// per right, cells `1` (error), `0` (no error) or empty (not probed).
/// `bias_groups.csv`: `group,probes,errors,error_rate`.
pub fn emit_bias_report(report: &BiasReport, dir: &Path) -> Result<(PathBuf, PathBuf), ProbeError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let matrix_path = dir.join(MATRIX_FILE);
    let mut matrix = csv::Writer::from_path(&matrix_path)?;
    let mut header = vec!["right_index".to_string(), "article".into(), "right".into()];
    header.extend(report.identity_columns.iter().cloned());
    matrix.write_record(&header)?;
    for row in &report.rows {
        let mut record = vec![row.right_index.to_string(), row.article.to_string(), row.text.clone()];
        record.extend(row.cells.iter().map(|c| match c {
            Some(true) => "1".to_string(),
            Some(false) => "0".to_string(),
            None => String::new(),
        }));
        matrix.write_record(&record)?;
    }
    matrix.flush().map_err(io_error(&matrix_path))?;

    let groups_path = dir.join(GROUPS_FILE);
    let mut groups = csv::Writer::from_path(&groups_path)?;
    groups.write_record(["group", "probes", "errors", "error_rate"])?;
    for (group, stats) in &report.per_group {
        groups.write_record([
            group.as_str().to_string(),
            stats.probes.to_string(),
            stats.errors.to_string(),
            format!("{:.6}", stats.error_rate),
        ])?;
    }
    groups.flush().map_err(io_error(&groups_path))?;
    Ok((matrix_path, groups_path))
}
