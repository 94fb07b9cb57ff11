//! Story continuation re-ranking with a judgment scorer.
//!
//! At each step a generator proposes candidate sentences, each candidate is
//! scored by the moral score of `context + " " + candidate`, and the chosen
//! sentence extends the context. Candidates scoring at or above the tie
//! threshold are treated as equally good and one of them is drawn with the
//! seeded generator; otherwise the highest score wins, first index on ties.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scorer::{moral_score, Scorer, ScorerError};
use crate::seed::keyed_rng;
use crate::serialize::{encode_query, WireFormat};
use crate::types::{Mode, Query};

#[derive(Debug, Error)]
pub enum RerankError {
    #[error("invalid rerank settings: {0}")]
    Config(String),
    #[error("candidate generator: {0}")]
    Generator(String),
    #[error("candidate contract violated: {0}")]
    Contract(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankConfig {
    pub candidates_per_step: usize,
    pub steps: usize,
    pub tie_threshold: f64,
    pub rng_seed: u64,
    pub format: WireFormat,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            candidates_per_step: 5,
            steps: 4,
            tie_threshold: 0.999,
            rng_seed: 0,
            format: WireFormat::Classic,
        }
    }
}

impl RerankConfig {
    pub fn validate(&self) -> Result<(), RerankError> {
        if self.candidates_per_step == 0 {
            return Err(RerankError::Config("candidates_per_step must be at least 1".into()));
        }
        if !(self.tie_threshold > 0.0 && self.tie_threshold <= 1.0) {
            return Err(RerankError::Config(format!(
                "tie_threshold must lie in (0, 1], got {}",
                self.tie_threshold
            )));
        }
        Ok(())
    }
}

/// Source of candidate continuations.
pub trait CandidateGenerator {
    /// Exactly `k` non-empty single-line continuations of `context`.
    fn next_candidates(&self, context: &str, k: usize) -> Result<Vec<String>, RerankError>;

    fn describe(&self) -> String;
}

fn check_candidates(candidates: Vec<String>, k: usize) -> Result<Vec<String>, RerankError> {
    if candidates.len() != k {
        return Err(RerankError::Contract(format!(
            "expected {k} candidates, got {}",
            candidates.len()
        )));
    }
    if let Some(i) = candidates.iter().position(|c| c.trim().is_empty() || c.contains('\n')) {
        return Err(RerankError::Contract(format!("candidate {i} is empty or spans lines")));
    }
    Ok(candidates)
}

/// Candidates read from a JSON script: either a list of per-step candidate
/// lists, consumed in order, or an object mapping the exact context to its
/// candidates.
#[derive(Debug)]
pub struct ScriptedGenerator {
    script: Script,
    step: AtomicUsize,
    origin: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Script {
    Steps(Vec<Vec<String>>),
    ByContext(BTreeMap<String, Vec<String>>),
}

impl ScriptedGenerator {
    pub fn from_steps(steps: Vec<Vec<String>>) -> Self {
        Self {
            script: Script::Steps(steps),
            step: AtomicUsize::new(0),
            origin: "inline".into(),
        }
    }

    pub fn from_contexts(map: BTreeMap<String, Vec<String>>) -> Self {
        Self {
            script: Script::ByContext(map),
            step: AtomicUsize::new(0),
            origin: "inline".into(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, RerankError> {
        let text =
            fs::read_to_string(path).map_err(|e| RerankError::Generator(format!("reading {}: {e}", path.display())))?;
        let script = serde_json::from_str(&text)
            .map_err(|e| RerankError::Generator(format!("parsing {}: {e}", path.display())))?;
        Ok(Self {
            script,
            step: AtomicUsize::new(0),
            origin: path.display().to_string(),
        })
    }
}

impl CandidateGenerator for ScriptedGenerator {
    fn next_candidates(&self, context: &str, k: usize) -> Result<Vec<String>, RerankError> {
        let candidates = match &self.script {
            Script::Steps(steps) => {
                let step = self.step.fetch_add(1, Ordering::SeqCst);
                steps
                    .get(step)
                    .cloned()
                    .ok_or_else(|| RerankError::Generator(format!("script has no step {step}")))?
            }
            Script::ByContext(map) => map
                .get(context)
                .cloned()
                .ok_or_else(|| RerankError::Generator(format!("script has no entry for `{context}`")))?,
        };
        check_candidates(candidates, k)
    }

    fn describe(&self) -> String {
        format!("script:{}", self.origin)
    }
}

/// Runs a shell command per step: the context is written to its standard
/// input, `NORMBANK_CANDIDATES` holds `k`, and each non-empty line of its
/// standard output is one candidate.
#[derive(Debug, Clone)]
pub struct CommandGenerator {
    command: String,
}

impl CommandGenerator {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
        }
    }
}

impl CandidateGenerator for CommandGenerator {
    fn next_candidates(&self, context: &str, k: usize) -> Result<Vec<String>, RerankError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .env("NORMBANK_CANDIDATES", k.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| RerankError::Generator(format!("starting `{}`: {e}", self.command)))?;
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            stdin
                .write_all(context.as_bytes())
                .map_err(|e| RerankError::Generator(format!("writing context: {e}")))?;
        }
        let output = child
            .wait_with_output()
            .map_err(|e| RerankError::Generator(format!("waiting for `{}`: {e}", self.command)))?;
        if !output.status.success() {
            return Err(RerankError::Generator(format!(
                "`{}` exited with {}",
                self.command, output.status
            )));
        }
        let stdout = String::from_utf8(output.stdout)
            .map_err(|_| RerankError::Generator("generator output is not UTF-8".into()))?;
        let candidates = stdout
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        check_candidates(candidates, k)
    }

    fn describe(&self) -> String {
        format!("cmd:{}", self.command)
    }
}

#[derive(Debug, Serialize)]
struct GenerateRequest<'a> {
    context: &'a str,
    k: usize,
}

#[derive(Debug, Deserialize)]
struct GenerateResponse {
    candidates: Vec<String>,
}

/// Posts `{"context": ..., "k": ...}` and expects `{"candidates": [...]}`.
pub struct HttpGenerator {
    url: String,
    timeout: Duration,
    client: reqwest::Client,
    runtime: tokio::runtime::Runtime,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, RerankError> {
        let client = reqwest::Client::builder()
            .build()
            .map_err(|e| RerankError::Generator(format!("http client: {e}")))?;
        let runtime = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .map_err(|e| RerankError::Generator(format!("async runtime: {e}")))?;
        Ok(Self {
            url: url.into(),
            timeout,
            client,
            runtime,
        })
    }
}

impl CandidateGenerator for HttpGenerator {
    fn next_candidates(&self, context: &str, k: usize) -> Result<Vec<String>, RerankError> {
        let body = serde_json::to_vec(&GenerateRequest { context, k }).expect("request serializes");
        let bytes = self.runtime.block_on(async {
            let response = self
                .client
                .post(&self.url)
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body)
                .timeout(self.timeout)
                .send()
                .await
                .map_err(|e| RerankError::Generator(e.to_string()))?;
            let status = response.status();
            if !status.is_success() {
                return Err(RerankError::Generator(format!("generator answered {status}")));
            }
            response
                .bytes()
                .await
                .map_err(|e| RerankError::Generator(e.to_string()))
        })?;
        let parsed: GenerateResponse = serde_json::from_slice(&bytes)
            .map_err(|e| RerankError::Generator(format!("invalid generator response: {e}")))?;
        check_candidates(parsed.candidates, k)
    }

    fn describe(&self) -> String {
        format!("http:{}", self.url)
    }
}

/// Outcome of one re-ranking step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub candidates: Vec<String>,
    pub scores: Vec<f64>,
    pub chosen_index: usize,
    /// Whether the choice was drawn among candidates at or above the
    /// threshold.
    pub sampled: bool,
}

impl StepResult {
    pub fn chosen(&self) -> &str {
        &self.candidates[self.chosen_index]
    }

    pub fn chosen_score(&self) -> f64 {
        self.scores[self.chosen_index]
    }
}

/// Picks a candidate index from its scores.
pub fn choose_index<R: Rng + ?Sized>(scores: &[f64], tie_threshold: f64, rng: &mut R) -> usize {
    let above: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= tie_threshold).collect();
    if !above.is_empty() {
        return above[rng.random_range(0..above.len())];
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Scores every candidate against the context and picks one.
pub fn rerank_step<R: Rng + ?Sized>(
    context: &str,
    candidates: Vec<String>,
    scorer: &dyn Scorer,
    cfg: &RerankConfig,
    rng: &mut R,
) -> Result<StepResult, RerankError> {
    if candidates.is_empty() {
        return Err(RerankError::Contract("no candidates to rank".into()));
    }
    let inputs: Vec<String> = candidates
        .iter()
        .map(|c| encode_query(&Query::single(format!("{context} {c}")), cfg.format))
        .collect();
    let verdicts = scorer.judge_batch(&inputs, Mode::FreeForm)?;
    let scores = verdicts.iter().map(moral_score).collect::<Result<Vec<_>, _>>()?;
    let sampled = scores.iter().any(|&s| s >= cfg.tie_threshold);
    let chosen_index = choose_index(&scores, cfg.tie_threshold, rng);
    Ok(StepResult {
        candidates,
        scores,
        chosen_index,
        sampled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Story {
    /// The prompt followed by one chosen sentence per step.
    pub sentences: Vec<String>,
    pub trace: Vec<StepResult>,
}

impl Story {
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Extends `first_sentence` one chosen sentence at a time.
pub fn generate_story(
    first_sentence: &str,
    generator: &dyn CandidateGenerator,
    scorer: &dyn Scorer,
    cfg: &RerankConfig,
) -> Result<Story, RerankError> {
    cfg.validate()?;
    let first = first_sentence.trim();
    if first.is_empty() {
        return Err(RerankError::Config("first sentence is empty".into()));
    }
    let mut rng = keyed_rng(cfg.rng_seed, "rerank");
    let mut sentences = vec![first.to_string()];
    let mut context = first.to_string();
    let mut trace = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let candidates = generator.next_candidates(&context, cfg.candidates_per_step)?;
        let step = rerank_step(&context, candidates, scorer, cfg, &mut rng)?;
        let chosen = step.chosen().trim().to_string();
        context.push(' ');
        context.push_str(&chosen);
        sentences.push(chosen);
        trace.push(step);
    }
    Ok(Story { sentences, trace })
}
