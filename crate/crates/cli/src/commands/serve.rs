//! `normbank serve`: HTTP wrapper around the configured backend.
//!
//! `POST /judge` speaks the same JSON protocol the remote backend sends, so
//! one instance can serve another. `GET /health` answers `ok`.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use clap::Args;
use normbank::scorer::{JudgeRequest, JudgeResponse, ScoreEntry, ScorerError, PROTOCOL_VERSION};
use normbank::Scorer;
use serde::Serialize;

use super::default_out;
use crate::manifest::RunRecorder;
use crate::settings::Settings;

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    /// Address to listen on; port 0 picks a free port
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Output directory for the run manifest [default: runs/serve]
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

type SharedScorer = Arc<dyn Scorer>;

fn error(status: StatusCode, message: String) -> Response {
    (status, axum::Json(serde_json::json!({ "error": message }))).into_response()
}

async fn judge(State(scorer): State<SharedScorer>, body: Bytes) -> Response {
    let request: JudgeRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid request: {e}")),
    };
    if request.version != PROTOCOL_VERSION {
        return error(
            StatusCode::BAD_REQUEST,
            format!("unsupported protocol version {}", request.version),
        );
    }
    let mode = request.mode;
    let worker = tokio::task::spawn_blocking(move || scorer.judge_batch(&request.inputs, mode));
    match worker.await {
        Ok(Ok(verdicts)) => axum::Json(JudgeResponse {
            version: PROTOCOL_VERSION,
            results: verdicts.iter().map(ScoreEntry::from_verdict).collect(),
        })
        .into_response(),
        Ok(Err(e @ ScorerError::Transport { .. })) => error(StatusCode::BAD_GATEWAY, e.to_string()),
        Ok(Err(e)) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("judging failed: {e}")),
    }
}

/// Registers the shutdown signals right away, so a signal that arrives
/// before the server is first polled still shuts it down gracefully.
#[cfg(unix)]
fn shutdown_signal() -> Result<impl std::future::Future<Output = ()>> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut terminate = signal(SignalKind::terminate()).context("listening for SIGTERM")?;
    let mut interrupt = signal(SignalKind::interrupt()).context("listening for SIGINT")?;
    Ok(async move {
        tokio::select! {
            _ = terminate.recv() => {},
            _ = interrupt.recv() => {},
        }
    })
}

#[cfg(not(unix))]
fn shutdown_signal() -> Result<impl std::future::Future<Output = ()>> {
    Ok(async {
        if let Err(e) = tokio::signal::ctrl_c().await {
            log::warn!("cannot listen for ctrl-c: {e}");
            std::future::pending::<()>().await;
        }
    })
}

pub fn router(scorer: SharedScorer) -> Router {
    Router::new()
        .route("/judge", post(judge))
        .route("/health", get(|| async { "ok" }))
        .with_state(scorer)
}

pub fn run(args: &ServeArgs, settings: &Settings) -> Result<()> {
    let scorer: SharedScorer = Arc::from(settings.build_scorer()?);
    let out = args.out.clone().unwrap_or_else(|| default_out("serve"));
    let config = serde_json::json!({ "settings": settings, "args": args });
    let mut rec = RunRecorder::start("serve", &out, config, settings.seed)?;
    if let Some(path) = settings.backend_file() {
        rec.input_file(&path)?;
    }

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")?;
    let served = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.addr)
            .await
            .with_context(|| format!("binding {}", args.addr))?;
        let local = listener.local_addr()?;
        let shutdown = shutdown_signal()?;
        rec.checkpoint()?;
        println!("listening on http://{local}/judge");
        log::info!("serving backend {}", scorer.describe());
        axum::serve(listener, router(scorer.clone()))
            .with_graceful_shutdown(shutdown)
            .await
            .context("serving")
    });
    drop(runtime);
    served?;
    rec.finish()?;
    Ok(())
}
