mod support;

use std::fs;
use std::time::Duration;

use normbank::scorer::{LexiconScorer, RemoteConfig, RemoteScorer};
use normbank::serialize::{encode_query, WireFormat};
use normbank::{Mode, Query, Scorer};
use support::*;

#[test]
fn build_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    for (format, golden) in [("classic", "golden/build"), ("plus", "golden/build_plus")] {
        let out = dir.path().join(format);
        let stdout = run_ok(&[
            "--seed",
            "20211014",
            "--format",
            format,
            "build",
            "--sources",
            path_str(&sources()),
            "--out",
            path_str(&out),
        ]);
        assert!(
            stdout.starts_with("built 794 instances (train 645, val 75, test 74)"),
            "{stdout}"
        );
        for file in [
            "train.src",
            "train.tgt",
            "val.src",
            "val.tgt",
            "test.src",
            "test.tgt",
            "stats.json",
        ] {
            let want = fs::read(fixture(golden).join(file)).unwrap();
            let got = fs::read(out.join(file)).unwrap();
            assert!(want == got, "{format} {file} differs from the golden copy");
        }
    }
}

#[test]
fn build_names_a_missing_source() {
    let dir = tempfile::tempdir().unwrap();
    let sources = dir.path().join("sources");
    fs::create_dir(&sources).unwrap();
    fs::copy(support::sources().join("ethics.jsonl"), sources.join("ethics.jsonl")).unwrap();
    let out = run(&[
        "build",
        "--sources",
        path_str(&sources),
        "--out",
        path_str(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("social_chem.jsonl"), "{stderr}");
    assert!(!dir.path().join("o/manifest.json").exists());
}

#[test]
fn malformed_records_abort_unless_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let sources = dir.path().join("sources");
    fs::create_dir(&sources).unwrap();
    for entry in fs::read_dir(support::sources()).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), sources.join(entry.file_name())).unwrap();
    }
    let mut sbic = fs::read_to_string(sources.join("sbic.jsonl")).unwrap();
    sbic.push_str("{\"post\": \"missing flags\"}\n");
    fs::write(sources.join("sbic.jsonl"), sbic).unwrap();

    let strict = run(&[
        "build",
        "--sources",
        path_str(&sources),
        "--out",
        path_str(&dir.path().join("a")),
    ]);
    assert!(!strict.status.success());
    assert!(String::from_utf8_lossy(&strict.stderr).contains("sbic"));

    let out = dir.path().join("b");
    run_ok(&[
        "--lenient",
        "build",
        "--sources",
        path_str(&sources),
        "--out",
        path_str(&out),
    ]);
    let stats: serde_json::Value = serde_json::from_slice(&fs::read(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["skipped_records"]["sbic"], 1);
    assert_eq!(stats["records"]["sbic"], 50);
}

#[test]
fn eval_reproduces_hand_counts() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(&[
        "eval",
        "--gold",
        path_str(&fixture("eval/gold.jsonl")),
        "--pred",
        path_str(&fixture("eval/pred.tgt")),
        "--out",
        path_str(dir.path()),
    ]);
    assert!(
        stdout.contains("unparseable predictions (counted incorrect): 1"),
        "{stdout}"
    );
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("eval_report.json")).unwrap()).unwrap();
    let frac = |k: &str| {
        (
            report[k]["correct"].as_u64().unwrap(),
            report[k]["total"].as_u64().unwrap(),
        )
    };
    assert_eq!(frac("c3_accuracy"), (3, 5));
    assert_eq!(frac("c2_accuracy"), (4, 5));
    assert_eq!(frac("text_polarity_accuracy"), (3, 5));
    assert_eq!(report["unknown_polarity_count"], 1);
    assert_eq!(frac("yesno_class_accuracy"), (3, 4));
    assert_eq!(frac("yesno_text_accuracy"), (2, 4));
    assert_eq!(frac("relative_accuracy"), (1, 3));
    assert_eq!(report["unparseable_predictions"], 1);
    assert_eq!(report["instances"], 12);
}

#[test]
fn eval_rejects_misaligned_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("short.tgt");
    fs::write(&pred, "<class> 1 </class>\n").unwrap();
    let out = run(&[
        "eval",
        "--gold",
        path_str(&fixture("eval/gold.jsonl")),
        "--pred",
        path_str(&pred),
        "--out",
        path_str(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 prediction lines for 12 gold instances"));
}

#[test]
fn judge_prints_and_records_a_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(&["judge", "helping a friend", "--out", path_str(dir.path())]);
    assert!(stdout.starts_with("class: positive\n"), "{stdout}");
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("verdict.json")).unwrap()).unwrap();
    assert_eq!(v["input"], "[moral_single]: helping a friend");
    assert_eq!(v["class"], "positive");

    let stdout = run_ok(&[
        "judge",
        "yelling at my kids",
        "--second",
        "reading a bedtime story to my kids",
        "--mode",
        "relative",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(stdout.starts_with("class: second\n"), "{stdout}");
}

#[test]
fn probe_oracle_makes_no_errors() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(&["--backend", "oracle", "probe", "--out", path_str(dir.path())]);
    assert!(stdout.contains("current phrasing: 0.00% error (0/8094)"), "{stdout}");
    assert!(stdout.contains("ideal phrasing: 0.00% error (0/8094)"), "{stdout}");
    for phrasing in ["current", "ideal"] {
        let report: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join(phrasing).join("report.json")).unwrap()).unwrap();
        assert_eq!(report["overall"]["errors"], 0);
        assert_eq!(report["probes"], 8094);
        assert!(dir.path().join(phrasing).join("bias_matrix.csv").exists());
    }
}

#[test]
fn oracle_is_refused_outside_probe() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--backend", "oracle", "judge", "x", "--out", path_str(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("only available to `probe`"));
}

#[test]
fn rerank_reproduces_golden_story() {
    let dir = tempfile::tempdir().unwrap();
    let table = format!("table:{}", path_str(&fixture("rerank/scores.json")));
    let script = format!("script:{}", path_str(&fixture("rerank/script.json")));
    run_ok(&[
        "--backend",
        &table,
        "rerank",
        "--prompt",
        "Anna found a wallet on the sidewalk.",
        "--generator",
        &script,
        "--out",
        path_str(dir.path()),
    ]);
    let want = fs::read_to_string(fixture("rerank/story.txt")).unwrap();
    let got = fs::read_to_string(dir.path().join("story.txt")).unwrap();
    assert_eq!(got, want);
    let story: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("story.json")).unwrap()).unwrap();
    assert_eq!(story["sentences"].as_array().unwrap().len(), 5);
    // only the last step has two candidates at or above the threshold
    let sampled: Vec<bool> = story["trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["sampled"].as_bool().unwrap())
        .collect();
    assert_eq!(sampled, [false, false, false, true]);
}

#[test]
fn analyze_splits_base_and_compositional() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(&[
        "analyze",
        "--input",
        path_str(&fixture("eval/gold.jsonl")),
        "--out",
        path_str(dir.path()),
    ]);
    assert!(stdout.starts_with("12 instances analyzed"), "{stdout}");
    let lines = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap().lines().count();
    assert_eq!(lines("base.jsonl") + lines("compositional.jsonl"), 12);
    assert!(!dir.path().join("sample.jsonl").exists());
}

#[test]
fn settings_come_from_flags_env_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "seed = 5\nformat = \"plus\"\n").unwrap();
    let settings = |out: &str, extra_env: Option<(&str, &str)>, flags: &[&str]| {
        let out = dir.path().join(out);
        let mut cmd = normbank();
        cmd.args(["--config", path_str(&config)]).args(flags);
        cmd.args(["judge", "eating pizza", "--out", path_str(&out)]);
        if let Some((k, v)) = extra_env {
            cmd.env(k, v);
        }
        assert!(cmd.output().unwrap().status.success());
        manifest(&out)["config"]["settings"].clone()
    };
    let s = settings("a", None, &[]);
    assert_eq!((s["seed"].as_u64(), s["format"].as_str()), (Some(5), Some("plus")));
    let s = settings("b", Some(("NORMBANK_SEED", "6")), &[]);
    assert_eq!(s["seed"], 6);
    let s = settings(
        "c",
        Some(("NORMBANK_SEED", "6")),
        &["--seed", "7", "--format", "classic"],
    );
    assert_eq!((s["seed"].as_u64(), s["format"].as_str()), (Some(7), Some("classic")));
}

#[test]
fn serve_answers_the_remote_backend() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(&[], &dir.path().join("serve"));
    let remote = RemoteScorer::new(RemoteConfig {
        endpoint: server.url.clone(),
        concurrency: 4,
        batch_size: 3,
        timeout: Duration::from_secs(10),
        ..RemoteConfig::default()
    })
    .unwrap();
    let inputs: Vec<String> = [
        "helping a friend",
        "killing a bear",
        "eating pizza",
        "lying to your boss",
        "thanking a nurse",
    ]
    .iter()
    .map(|t| encode_query(&Query::single(*t), WireFormat::Classic))
    .collect();
    let local = LexiconScorer::new().judge_batch(&inputs, Mode::FreeForm).unwrap();
    let served = remote.judge_batch(&inputs, Mode::FreeForm).unwrap();
    assert_eq!(served.len(), local.len());
    for (s, l) in served.iter().zip(&local) {
        assert_eq!(s.chosen, l.chosen);
        assert_eq!(s.text_judgment, l.text_judgment);
        for (label, score) in &l.class_scores {
            assert!((s.class_scores[label] - score).abs() < 1e-9);
        }
    }

    // a CLI run can use the server as its backend
    let out = dir.path().join("judge");
    let stdout = run_ok(&[
        "--backend",
        "remote",
        "--endpoint",
        &server.url,
        "judge",
        "killing a bear",
        "--out",
        path_str(&out),
    ]);
    assert!(stdout.starts_with("class: negative"), "{stdout}");

    assert!(server.stop().success());
    assert!(manifest(&dir.path().join("serve"))["finished_at"].is_string());
}

#[test]
fn every_command_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_all_commands(a.path());
    let second = run_all_commands(b.path());
    assert_eq!(first.len(), 8);
    for (command, hashes) in &first {
        assert!(
            command == "serve" || !hashes.is_empty(),
            "{command} recorded no outputs"
        );
        assert_eq!(hashes, &second[command], "{command} outputs differ between runs");
    }
}
