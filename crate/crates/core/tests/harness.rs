use std::fs;

use fdsec::harness::{
    read_csv, run_experiment, run_to_dir, select_drops, ExperimentKind, ExperimentSpec, Scheme, CSV_COLUMNS,
};
use fdsec::scenario::SystemConfig;
use fdsec::sdp::{ClarabelBackend, SolveStatus};

const FEASIBLE_SEED: u64 = 12;

fn spec(kind: ExperimentKind) -> ExperimentSpec {
    ExperimentSpec {
        trials: 1,
        seed: FEASIBLE_SEED,
        ..ExperimentSpec::new(kind, SystemConfig::desk_scale())
    }
}

#[test]
fn one_tradeoff_trial_yields_a_record_per_weight() {
    let s = ExperimentSpec {
        baseline: false,
        ..spec(ExperimentKind::Tradeoff)
    };
    let out = run_experiment(&s, &ClarabelBackend::default()).unwrap();
    assert_eq!(out.drop_seeds, vec![FEASIBLE_SEED]);
    assert_eq!(out.points.len(), 1);
    let recs = &out.points[0].records;
    assert_eq!(recs.len(), 101);
    assert!(recs.iter().all(|r| r.scheme == Scheme::Proposed && r.status == SolveStatus::Optimal));
    for (i, r) in recs.iter().enumerate() {
        assert!((r.lambda1 - i as f64 / 100.0).abs() < 1e-12);
    }
}

#[test]
fn emitted_csv_parses_back_to_the_records() {
    let dir = tempfile::tempdir().unwrap();
    let s = ExperimentSpec {
        points: Some(vec![4.0, 12.0]),
        trials: 2,
        ..spec(ExperimentKind::PowerVsDlSinr)
    };
    let be = ClarabelBackend::default();
    run_to_dir(&s, &be, dir.path()).unwrap();
    let out = run_experiment(&s, &be).unwrap();
    for (i, point) in out.points.iter().enumerate() {
        let path = dir.path().join(format!("records-{i:02}.csv"));
        let header = fs::read_to_string(&path).unwrap();
        assert_eq!(header.lines().next().unwrap(), CSV_COLUMNS.join(","));
        let rows = read_csv(&path).unwrap();
        assert_eq!(rows.len(), point.records.len());
        for (row, rec) in rows.iter().zip(&point.records) {
            assert_eq!(row.seed, rec.seed);
            assert_eq!(row.scheme, rec.scheme.as_str());
            assert_eq!(row.status, rec.status.as_str());
            assert_eq!(row.solve_ms, None);
            let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) => (a - b).abs() <= 1e-8 * b.abs().max(1e-300),
                (None, None) => true,
                _ => false,
            };
            assert!(close(row.q1_dbm, rec.q1_dbm()));
            assert!(close(row.q2_dbm, rec.q2_dbm()));
            assert!(close(row.max_rank_ratio, rec.max_rank_ratio));
            assert!(close(row.min_dl_secrecy, rec.secrecy.as_ref().and_then(|s| s.min_dl())));
            if rec.status != SolveStatus::Optimal {
                assert!(row.q1_dbm.is_none() && row.tau.is_none());
            }
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kind"], "power-vs-dl-sinr");
    assert_eq!(summary["config"]["k"], 2);
    assert_eq!(summary["points"].as_array().unwrap().len(), 2);
}

#[test]
fn identical_runs_write_identical_bytes() {
    let s = ExperimentSpec {
        trials: 3,
        seed: 10,
        points: Some(vec![0.0, 0.05]),
        ..spec(ExperimentKind::PowerVsKappa)
    };
    let be = ClarabelBackend::default();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_to_dir(&s, &be, a.path()).unwrap();
    run_to_dir(
        &ExperimentSpec {
            exec: fdsec::exec::Execution::Sequential,
            ..s.clone()
        },
        &be,
        b.path(),
    )
    .unwrap();
    for name in ["records-00.csv", "records-01.csv", "summary.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn unwritable_output_fails_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("taken");
    fs::write(&blocker, "").unwrap();
    let s = ExperimentSpec {
        trials: 1000,
        ..spec(ExperimentKind::Tradeoff)
    };
    let start = std::time::Instant::now();
    let err = run_to_dir(&s, &ClarabelBackend::default(), &blocker.join("out")).unwrap_err();
    assert!(matches!(err, fdsec::Error::Io(_)), "{err}");
    assert!(start.elapsed().as_secs() < 5);
}

#[test]
fn infeasible_drops_count_as_outage_without_means() {
    let dir = tempfile::tempdir().unwrap();
    let s = ExperimentSpec {
        seed: 0,
        trials: 1,
        baseline: false,
        ..spec(ExperimentKind::OutageVsDlSinr)
    };
    let summary = run_to_dir(
        &ExperimentSpec {
            points: Some(vec![12.0]),
            ..s
        },
        &ClarabelBackend::default(),
        dir.path(),
    )
    .unwrap();
    let w = &summary.points[0].schemes[0].weights[0];
    assert_eq!(w.outage, 1.0);
    assert!(w.means.is_none());
}

#[test]
fn drop_selection_skips_nothing_on_generic_channels() {
    let cfg = SystemConfig::desk_scale();
    let (seeds, skipped) = select_drops(&cfg, 5, 4).unwrap();
    assert_eq!(seeds, vec![5, 6, 7, 8]);
    assert_eq!(skipped, 0);
}

#[test]
fn invalid_specs_are_rejected() {
    let be = ClarabelBackend::default();
    let zero = ExperimentSpec {
        trials: 0,
        ..spec(ExperimentKind::Tradeoff)
    };
    assert!(run_experiment(&zero, &be).is_err());
    let step = ExperimentSpec {
        lambda_step: 0.7,
        ..spec(ExperimentKind::Tradeoff)
    };
    assert!(run_experiment(&step, &be).is_err());
    let negative = ExperimentSpec {
        points: Some(vec![-0.1]),
        ..spec(ExperimentKind::PowerVsKappa)
    };
    assert!(run_experiment(&negative, &be).is_err());
}
