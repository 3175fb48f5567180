use super::*;
use crate::rsv::RsvOptions;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_experiment(kind, 5);
    match kind {
        ExperimentKind::Robustness | ExperimentKind::Stability => {
            cfg.m = 10;
            cfg.d = 20;
            cfg.s = 2;
            cfg.trials = 4;
        }
        ExperimentKind::ExactImpliesStable => {
            cfg.trials = 4;
            cfg.rsv = RsvOptions::grid(0.02);
        }
        ExperimentKind::PhaseSweep => {
            cfg.d = 10;
            cfg.s = 1;
            cfg.trials = 10;
            cfg.m_values = vec![2, 5, 10];
            cfg.samples = 2000;
        }
        ExperimentKind::Sandwich => {
            cfg.trials = 4;
            cfg.rsv = RsvOptions::grid(0.02);
        }
        ExperimentKind::WidthExpansion | ExperimentKind::CircStatDim => cfg.samples = 5000,
        ExperimentKind::Escape => {
            cfg.trials = 500;
            cfg.d = 6;
            cfg.m = 4;
        }
        ExperimentKind::Sqrt5 => cfg.trials = 500,
    }
    cfg
}

#[test]
fn config_round_trip_and_defaults() {
    let cfg = ExperimentConfig::from_json(r#"{"schema_version": 1, "experiment": "stability", "trials": 3}"#).unwrap();
    assert_eq!(cfg.experiment, ExperimentKind::Stability);
    assert_eq!(cfg.trials, 3);
    assert_eq!(cfg.m, 20);
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
}

#[test]
fn config_rejects_bad_input() {
    assert!(ExperimentConfig::from_json(r#"{"schema_version": 1, "bogus": 1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"schema_version": 2}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"schema_version": 1, "m": 0}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"schema_version": 1, "eps": -0.1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"schema_version": 1, "s": 50, "d": 10}"#).is_err());
    assert!(
        ExperimentConfig::from_json(r#"{"schema_version": 1, "experiment": "phase_sweep", "m_values": [0, 3]}"#)
            .is_err()
    );
    assert!(ExperimentConfig::from_json(
        r#"{"schema_version": 1, "matrix": {"source": "file", "path": "/nonexistent/a.txt"}}"#
    )
    .is_err());
    assert!(ExperimentKind::parse("nope").is_err());
    for k in ExperimentKind::ALL {
        assert_eq!(ExperimentKind::parse(k.name()).unwrap(), k);
    }
}

#[test]
fn every_experiment_runs_and_self_verifies() {
    for kind in ExperimentKind::ALL {
        let r = run_experiment(&small(kind)).unwrap();
        assert!(r.verify(), "{}", kind.name());
        assert!(
            r.passed,
            "{}: {:?}",
            kind.name(),
            r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()
        );
        assert_eq!(r.name, kind.name());
        assert!(r.wall_time_s.is_none());
    }
}

#[test]
fn zero_noise_robustness_is_exact_recovery() {
    let mut cfg = small(ExperimentKind::Robustness);
    cfg.eps = 0.0;
    let r = run_experiment(&cfg).unwrap();
    for rec in &r.records {
        if rec["verifiable"].as_bool().unwrap() {
            assert!(rec["error"].as_f64().unwrap() <= 1e-4);
        }
    }
}

#[test]
fn stability_collapses_to_robustness() {
    let (k1, k2) = stability_constants(4, 0.5, 1.0, 2.0);
    assert!((k1 - 8.0).abs() < 1e-15);
    assert!((k2 - ((4.0 * 2.0 + 1.0) / 0.5 + 2.0)).abs() < 1e-15);
    let mut cfg = small(ExperimentKind::Stability);
    cfg.delta = 0.0;
    assert!(run_experiment(&cfg).unwrap().passed);
    cfg.delta = 0.05;
    cfg.eps = 0.0;
    assert!(run_experiment(&cfg).unwrap().passed);
}

#[test]
fn reruns_are_identical() {
    let mut cfg = small(ExperimentKind::Robustness);
    cfg.parallel = false;
    let a = run_experiment(&cfg).unwrap().to_json().unwrap();
    let b = run_experiment(&cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    cfg.parallel = true;
    let c = run_experiment(&cfg).unwrap().to_json().unwrap();
    assert_eq!(a.replace("\"parallel\": false", "\"parallel\": true"), c);
}

#[test]
fn timing_is_opt_in() {
    let mut cfg = small(ExperimentKind::Sqrt5);
    cfg.record_timing = true;
    assert!(run_experiment(&cfg).unwrap().wall_time_s.is_some());
}

#[test]
fn phase_sweep_outputs() {
    let dir = std::env::temp_dir().join(format!("angsep-harness-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut cfg = small(ExperimentKind::PhaseSweep);
    cfg.output = OutputPaths {
        report: Some(dir.join("r.json")),
        csv: Some(dir.join("r.csv")),
        svg: Some(dir.join("r.svg")),
    };
    let r = run_experiment(&cfg).unwrap();
    write_outputs(&cfg, &r).unwrap();
    let csv = std::fs::read_to_string(dir.join("r.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "m,stat_dim,success_rate,w_sq");
    assert_eq!(csv.lines().count(), 4);
    let last = r.records.last().unwrap();
    assert_eq!(last["success_rate"].as_f64().unwrap(), 1.0);
    assert!(std::fs::read_to_string(dir.join("r.svg")).unwrap().starts_with("<svg"));
    let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("r.json")).unwrap()).unwrap();
    assert_eq!(back["name"], "phase_sweep");
    std::fs::remove_dir_all(dir).unwrap();
}
