//! Judgment server stand-in on a background runtime.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::thread::JoinHandle;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use normbank::scorer::{JudgeRequest, JudgeResponse, ScoreEntry};
use rand::Rng;

#[derive(Clone, Copy)]
pub enum Behavior {
    /// Echo each input back as its text after a random 0-7 ms delay, so
    /// concurrent batches finish out of order.
    Echo,
    /// Answer 503 to the first `n` requests, then echo.
    Unavailable(usize),
    Reject,
    Garbage,
}

pub struct Stub {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl Drop for Stub {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[derive(Clone)]
struct StubState {
    behavior: Behavior,
    hits: Arc<AtomicUsize>,
}

fn echo(request: &JudgeRequest) -> JudgeResponse {
    let labels = request.mode_labels();
    JudgeResponse {
        version: 1,
        results: request
            .inputs
            .iter()
            .map(|input| ScoreEntry {
                class_scores: labels
                    .iter()
                    .enumerate()
                    .map(|(k, l)| (l.to_string(), if k == 0 { 1.0 } else { 0.0 }))
                    .collect(),
                text: Some(input.clone()),
            })
            .collect(),
    }
}

trait ModeLabels {
    fn mode_labels(&self) -> Vec<&'static str>;
}

impl ModeLabels for JudgeRequest {
    fn mode_labels(&self) -> Vec<&'static str> {
        self.mode.labels().iter().map(|l| l.as_str()).collect()
    }
}

async fn handle(State(state): State<StubState>, body: Bytes) -> Response {
    let hit = state.hits.fetch_add(1, Ordering::SeqCst);
    let request: JudgeRequest = serde_json::from_slice(&body).expect("client sends valid requests");
    match state.behavior {
        Behavior::Reject => return (StatusCode::BAD_REQUEST, "no").into_response(),
        Behavior::Garbage => return "not json".into_response(),
        Behavior::Unavailable(n) if hit < n => return StatusCode::SERVICE_UNAVAILABLE.into_response(),
        _ => {}
    }
    let delay = rand::rng().random_range(0..8);
    tokio::time::sleep(Duration::from_millis(delay)).await;
    axum::Json(echo(&request)).into_response()
}

pub fn start_stub(behavior: Behavior) -> Stub {
    let hits = Arc::new(AtomicUsize::new(0));
    let state = StubState {
        behavior,
        hits: hits.clone(),
    };
    let (url_tx, url_rx) = mpsc::channel();
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            let addr = listener.local_addr().unwrap();
            url_tx.send(format!("http://{addr}/judge")).unwrap();
            let app = Router::new().route("/judge", post(handle)).with_state(state);
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = stop_rx.await;
                })
                .await
                .unwrap();
        });
    });
    Stub {
        url: url_rx.recv().unwrap(),
        hits,
        stop: Some(stop_tx),
        thread: Some(thread),
    }
}
