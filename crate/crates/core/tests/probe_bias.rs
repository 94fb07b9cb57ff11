use std::sync::atomic::{AtomicUsize, Ordering};

use normbank::probe::{
    builtin_identities, builtin_rights, emit_bias_report, expand_probes, run_probe, OracleScorer, Phrasing, ProbeError,
    ProbeRunOptions,
};
use normbank::scorer::ScorerError;
use normbank::serialize::WireFormat;
use normbank::{ClassLabel, Mode, Scorer, Verdict};

/// Agrees with everything; fails once `fail_after` judgments have been made.
struct Agreeable {
    calls: AtomicUsize,
    fail_after: usize,
}

impl Agreeable {
    fn new(fail_after: usize) -> Self {
        Self {
            calls: AtomicUsize::new(0),
            fail_after,
        }
    }
}

impl Scorer for Agreeable {
    fn judge(&self, _: &str, mode: Mode) -> Result<Verdict, ScorerError> {
        assert_eq!(mode, Mode::YesNo);
        if self.calls.fetch_add(1, Ordering::SeqCst) >= self.fail_after {
            return Err(ScorerError::Contract("backend went away".into()));
        }
        Ok(Verdict::one_hot(ClassLabel::Agree, None))
    }

    fn describe(&self) -> String {
        "agreeable".into()
    }
}

#[test]
fn always_agree_error_is_the_share_of_negated_rights() {
    let rights = builtin_rights();
    let identities = builtin_identities();
    let negated = rights.iter().filter(|r| r.negated).count();
    for phrasing in [Phrasing::CurrentWorld, Phrasing::IdealWorld] {
        let probes = expand_probes(&rights, &identities, phrasing).unwrap();
        assert_eq!(probes.len(), 38 * 213);
        let report = run_probe(
            &Agreeable::new(usize::MAX),
            &probes,
            phrasing,
            &ProbeRunOptions::default(),
        )
        .unwrap();
        match phrasing {
            Phrasing::CurrentWorld => {
                assert_eq!(negated, 7);
                assert_eq!(report.overall.errors, 7 * 213);
                assert!((report.overall.error_rate - 7.0 / 38.0).abs() < 1e-4);
                for stats in report.per_group.values() {
                    assert!((stats.error_rate - 7.0 / 38.0).abs() < 1e-12);
                }
            }
            Phrasing::IdealWorld => assert_eq!(report.overall.errors, 0),
        }
        let oracle = OracleScorer::new(&probes, WireFormat::Plus);
        let opts = ProbeRunOptions {
            format: WireFormat::Plus,
            ..ProbeRunOptions::default()
        };
        assert_eq!(run_probe(&oracle, &probes, phrasing, &opts).unwrap().overall.errors, 0);
    }
}

#[test]
fn interrupted_run_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let probes = expand_probes(&builtin_rights(), &builtin_identities()[..20], Phrasing::CurrentWorld).unwrap();
    let opts = ProbeRunOptions {
        chunk_size: 100,
        checkpoint: Some(dir.path().join("progress.jsonl")),
        ..ProbeRunOptions::default()
    };
    let failing = Agreeable::new(350);
    match run_probe(&failing, &probes, Phrasing::CurrentWorld, &opts) {
        Err(ProbeError::Scorer { completed, total, .. }) => {
            assert_eq!(completed, 300);
            assert_eq!(total, probes.len());
        }
        other => panic!("expected a scorer error, got {other:?}"),
    }

    let resumed_scorer = Agreeable::new(usize::MAX);
    let resumed = run_probe(&resumed_scorer, &probes, Phrasing::CurrentWorld, &opts).unwrap();
    assert_eq!(resumed_scorer.calls.load(Ordering::SeqCst), probes.len() - 300);
    let whole = run_probe(
        &Agreeable::new(usize::MAX),
        &probes,
        Phrasing::CurrentWorld,
        &ProbeRunOptions::default(),
    )
    .unwrap();
    assert_eq!(resumed, whole);

    // a checkpoint for other probes is refused
    let other = expand_probes(&builtin_rights(), &builtin_identities()[..5], Phrasing::CurrentWorld).unwrap();
    assert!(matches!(
        run_probe(&resumed_scorer, &other, Phrasing::CurrentWorld, &opts),
        Err(ProbeError::Checkpoint { .. })
    ));
}

#[test]
fn report_files_have_one_row_per_right() {
    let dir = tempfile::tempdir().unwrap();
    let identities = &builtin_identities()[..4];
    let probes = expand_probes(&builtin_rights(), identities, Phrasing::CurrentWorld).unwrap();
    let report = run_probe(
        &Agreeable::new(usize::MAX),
        &probes,
        Phrasing::CurrentWorld,
        &ProbeRunOptions::default(),
    )
    .unwrap();
    let (matrix, groups) = emit_bias_report(&report, dir.path()).unwrap();

    let mut rdr = csv::Reader::from_path(matrix).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 3 + 4);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 38);
    let error_cells = rows.iter().flat_map(|r| r.iter().skip(3)).filter(|c| *c == "1").count();
    assert_eq!(error_cells, 7 * 4);

    let mut rdr = csv::Reader::from_path(groups).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["group", "probes", "errors", "error_rate"]
    );
    let probed: usize = rdr.records().map(|r| r.unwrap()[1].parse::<usize>().unwrap()).sum();
    assert_eq!(probed, probes.len());
}
