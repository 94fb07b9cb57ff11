//! JSON-over-HTTP client for an external judgment server.
//!
//! Each batch is one `POST` to the endpoint:
//!
//! ```json
//! {"version": 1, "mode": "free_form", "format": "classic",
//!  "inputs": ["[moral_single]: helping a friend"]}
//! ```
//!
//! and the server answers with one result per input, in request order:
//!
//! ```json
//! {"version": 1, "results": [
//!   {"class_scores": {"negative": 0.1, "discretionary": 0.2, "positive": 0.7},
//!    "text": "it's good"}]}
//! ```
//!
//! Class names are `negative`/`discretionary`/`positive`,
//! `disagree`/`agree` or `first`/`second` depending on the mode. Connection
//! failures, timeouts, 429 and 5xx responses are retried with capped
//! exponential backoff; other 4xx responses and malformed bodies are protocol
//! errors.

use std::time::Duration;

use futures::stream::{self, StreamExt};
use reqwest::header::CONTENT_TYPE;
use serde::{Deserialize, Serialize};

use crate::scorer::{ScoreEntry, Scorer, ScorerError, Verdict};
use crate::serialize::WireFormat;
use crate::types::Mode;

pub const PROTOCOL_VERSION: u32 = 1;

/// Transport settings for [`RemoteScorer`].
#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub format: WireFormat,
    /// Inputs per request.
    pub batch_size: usize,
    /// Requests in flight at once.
    pub concurrency: usize,
    /// Per-request timeout.
    pub timeout: Duration,
    /// Retries after the first attempt.
    pub retries: u32,
    pub backoff_base: Duration,
    pub backoff_cap: Duration,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            format: WireFormat::Classic,
            batch_size: 16,
            concurrency: 4,
            timeout: Duration::from_secs(30),
            retries: 3,
            backoff_base: Duration::from_millis(200),
            backoff_cap: Duration::from_secs(5),
        }
    }
}

impl RemoteConfig {
    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt);
        self.backoff_base.saturating_mul(factor).min(self.backoff_cap)
    }
}

/// Request body of one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub version: u32,
    pub mode: Mode,
    pub format: WireFormat,
    pub inputs: Vec<String>,
}

/// Response body of one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub version: u32,
    pub results: Vec<ScoreEntry>,
}

enum Failure {
    Retry(String),
    Fatal(ScorerError),
}

async fn post_once(client: &reqwest::Client, cfg: &RemoteConfig, body: &[u8]) -> Result<Vec<u8>, Failure> {
    let response = client
        .post(&cfg.endpoint)
        .header(CONTENT_TYPE, "application/json")
        .body(body.to_vec())
        .timeout(cfg.timeout)
        .send()
        .await
        .map_err(|e| Failure::Retry(e.to_string()))?;
    let status = response.status();
    if status.is_server_error() || status.as_u16() == 429 {
        return Err(Failure::Retry(format!("server answered {status}")));
    }
    let bytes = response.bytes().await.map_err(|e| Failure::Retry(e.to_string()))?;
    if !status.is_success() {
        let detail = String::from_utf8_lossy(&bytes);
        return Err(Failure::Fatal(ScorerError::Protocol(format!(
            "server rejected request with {status}: {detail}"
        ))));
    }
    Ok(bytes.to_vec())
}

fn parse_response(bytes: &[u8], expected: usize, mode: Mode) -> Result<Vec<Verdict>, ScorerError> {
    let response: JudgeResponse =
        serde_json::from_slice(bytes).map_err(|e| ScorerError::Protocol(format!("invalid response body: {e}")))?;
    if response.version != PROTOCOL_VERSION {
        return Err(ScorerError::Protocol(format!(
            "response version {} (expected {PROTOCOL_VERSION})",
            response.version
        )));
    }
    if response.results.len() != expected {
        return Err(ScorerError::Protocol(format!(
            "{} results for {expected} inputs",
            response.results.len()
        )));
    }
    response
        .results
        .iter()
        .map(|entry| {
            entry.to_verdict(mode).map_err(|e| match e {
                ScorerError::Contract(msg) => ScorerError::Protocol(msg),
                other => other,
            })
        })
        .collect()
}

async fn judge_chunk(
    client: &reqwest::Client,
    cfg: &RemoteConfig,
    offset: usize,
    chunk: &[String],
    mode: Mode,
) -> Result<Vec<Verdict>, ScorerError> {
    let request = JudgeRequest {
        version: PROTOCOL_VERSION,
        mode,
        format: cfg.format,
        inputs: chunk.to_vec(),
    };
    let body = serde_json::to_vec(&request).expect("request serializes");
    let mut attempt = 0;
    loop {
        match post_once(client, cfg, &body).await {
            Ok(bytes) => return parse_response(&bytes, chunk.len(), mode),
            Err(Failure::Fatal(e)) => return Err(e),
            Err(Failure::Retry(message)) => {
                if attempt >= cfg.retries {
                    return Err(ScorerError::Transport {
                        indices: (offset..offset + chunk.len()).collect(),
                        message,
                    });
                }
                log::debug!("retrying batch at {offset} after: {message}");
                tokio::time::sleep(cfg.backoff(attempt)).await;
                attempt += 1;
            }
        }
    }
}

/// Judges `inputs` against the configured endpoint.
///
/// Results are index-aligned with `inputs` whatever order the batches
/// complete in. If any batch fails for good, nothing is returned: the error
/// names every input whose batch failed.
pub async fn remote_judge(
    client: &reqwest::Client,
    cfg: &RemoteConfig,
    inputs: &[String],
    mode: Mode,
) -> Result<Vec<Verdict>, ScorerError> {
    let batch = cfg.batch_size.max(1);
    let outcomes: Vec<(usize, Result<Vec<Verdict>, ScorerError>)> = stream::iter(inputs.chunks(batch).enumerate())
        .map(|(i, chunk)| async move {
            let offset = i * batch;
            (offset, judge_chunk(client, cfg, offset, chunk, mode).await)
        })
        .buffer_unordered(cfg.concurrency.max(1))
        .collect()
        .await;

    let mut slots: Vec<Option<Verdict>> = vec![None; inputs.len()];
    let mut failed = Vec::new();
    let mut last_message = String::new();
    for (offset, outcome) in outcomes {
        match outcome {
            Ok(verdicts) => {
                for (k, v) in verdicts.into_iter().enumerate() {
                    slots[offset + k] = Some(v);
                }
            }
            Err(ScorerError::Transport { indices, message }) => {
                failed.extend(indices);
                last_message = message;
            }
            Err(other) => return Err(other),
        }
    }
    if !failed.is_empty() {
        failed.sort_unstable();
        return Err(ScorerError::Transport {
            indices: failed,
            message: last_message,
        });
    }
    Ok(slots.into_iter().map(|v| v.expect("every batch succeeded")).collect())
}

/// Blocking [`Scorer`] over [`remote_judge`], driving its own runtime.
pub struct RemoteScorer {
    cfg: RemoteConfig,
    client: reqwest::Client,
    runtime: tokio::runtime::Runtime,
}

impl RemoteScorer {
    pub fn new(cfg: RemoteConfig) -> Result<Self, ScorerError> {
        if cfg.endpoint.is_empty() {
            return Err(ScorerError::Setup("remote backend needs an endpoint URL".into()));
        }
        let client = reqwest::Client::builder()
            .build()
            .map_err(|e| ScorerError::Setup(format!("http client: {e}")))?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .map_err(|e| ScorerError::Setup(format!("async runtime: {e}")))?;
        Ok(Self { cfg, client, runtime })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.cfg
    }
}

impl Scorer for RemoteScorer {
    fn judge(&self, encoded_input: &str, mode: Mode) -> Result<Verdict, ScorerError> {
        let mut out = self.judge_batch(&[encoded_input.to_string()], mode)?;
        Ok(out.remove(0))
    }

    fn judge_batch(&self, inputs: &[String], mode: Mode) -> Result<Vec<Verdict>, ScorerError> {
        self.runtime
            .block_on(remote_judge(&self.client, &self.cfg, inputs, mode))
    }

    fn describe(&self) -> String {
        format!("remote:{}", self.cfg.endpoint)
    }
}
