//! Helpers for driving the `normbank` binary from tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn sources() -> PathBuf {
    root().join("crates/core/fixtures/sources")
}

/// The binary with a clean `NORMBANK_*` environment, run from the
/// workspace root.
pub fn normbank() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_normbank"));
    for (key, _) in std::env::vars() {
        if key.starts_with("NORMBANK_") {
            cmd.env_remove(key);
        }
    }
    cmd.current_dir(root()).env("RUST_LOG", "error");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    normbank().args(args).output().expect("binary runs")
}

/// Runs the binary and panics with its stderr unless it succeeds.
pub fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "normbank {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Output file to hash, as recorded in the manifest.
pub fn output_hashes(dir: &Path) -> BTreeMap<String, String> {
    serde_json::from_value(manifest(dir)["outputs"].clone()).unwrap()
}

/// A running `normbank serve`; sends SIGTERM on drop.
pub struct Server {
    pub child: Child,
    pub url: String,
}

impl Server {
    pub fn start(global: &[&str], out: &Path) -> Self {
        let mut child = normbank()
            .args(global)
            .args(["serve", "--addr", "127.0.0.1:0", "--out", path_str(out)])
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("server starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let url = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected server banner `{line}`"))
            .to_string();
        Self { child, url }
    }

    /// Stops the server gracefully and waits for it to exit.
    pub fn stop(mut self) -> std::process::ExitStatus {
        self.terminate();
        self.child.wait().unwrap()
    }

    fn terminate(&mut self) {
        let _ = Command::new("kill")
            .args(["-TERM", &self.child.id().to_string()])
            .status();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            self.terminate();
            let _ = self.child.wait();
        }
    }
}

/// Every command with arguments that make it cheap and deterministic,
/// writing into `out`.
pub fn command_matrix(out: &Path) -> Vec<(&'static str, Vec<String>)> {
    let o = |name: &str| out.join(name).to_str().unwrap().to_string();
    let s = |p: PathBuf| p.to_str().unwrap().to_string();
    let gold = s(fixture("eval/gold.jsonl"));
    vec![
        (
            "build",
            vec![
                "--seed".into(),
                "20211014".into(),
                "build".into(),
                "--sources".into(),
                s(sources()),
                "--out".into(),
                o("build"),
            ],
        ),
        (
            "judge",
            vec!["judge".into(), "killing a bear".into(), "--out".into(), o("judge")],
        ),
        (
            "eval",
            vec![
                "eval".into(),
                "--gold".into(),
                gold.clone(),
                "--pred".into(),
                s(fixture("eval/pred.tgt")),
                "--out".into(),
                o("eval"),
            ],
        ),
        (
            "eval-backend",
            vec![
                "eval".into(),
                "--gold".into(),
                gold.clone(),
                "--out".into(),
                o("eval-backend"),
            ],
        ),
        (
            "probe",
            vec![
                "probe".into(),
                "--chunk-size".into(),
                "1000".into(),
                "--fresh".into(),
                "--out".into(),
                o("probe"),
            ],
        ),
        (
            "rerank",
            vec![
                "--backend".into(),
                format!("table:{}", s(fixture("rerank/scores.json"))),
                "rerank".into(),
                "--prompt".into(),
                "Anna found a wallet on the sidewalk.".into(),
                "--generator".into(),
                format!("script:{}", s(fixture("rerank/script.json"))),
                "--out".into(),
                o("rerank"),
            ],
        ),
        (
            "analyze",
            vec![
                "analyze".into(),
                "--input".into(),
                gold,
                "--fraction".into(),
                "0.5".into(),
                "--out".into(),
                o("analyze"),
            ],
        ),
    ]
}

/// Runs every command of [`command_matrix`] into `out`; returns the output
/// hashes per command, `serve` included.
pub fn run_all_commands(out: &Path) -> BTreeMap<String, BTreeMap<String, String>> {
    let mut hashes = BTreeMap::new();
    for (name, args) in command_matrix(out) {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        run_ok(&args);
        hashes.insert(name.to_string(), output_hashes(&out.join(name)));
    }
    let server = Server::start(&[], &out.join("serve"));
    assert!(server.stop().success());
    hashes.insert("serve".into(), output_hashes(&out.join("serve")));
    hashes
}
