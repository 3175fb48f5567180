use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn angsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_angsep")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 3×6 matrix with a well-spread kernel.
const MATRIX: &str = "3 6\n1 0 0 0.5 -0.3 0.2\n0 1 0 -0.4 0.6 0.1\n0 0 1 0.3 0.2 -0.7\n";

#[test]
fn rip_reports_table() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.txt", "2 2\n1 0\n0 2\n");
    let out = angsep(&["rip", "--matrix", s(&a), "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["delta"]["1"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!((v["delta"]["2"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    let csv = angsep(&["rip", "--matrix", s(&a), "--k", "2", "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("k,delta\n1,3.0000000000000000e0\n"), "{text}");
}

#[test]
fn nsp_exit_code_follows_the_property() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.txt", MATRIX);
    let out = angsep(&["nsp", "--matrix", s(&a), "--support", "0"]);
    let v = json(&out);
    let holds = v["holds"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if holds { 0 } else { 1 }));
    // two identical columns: e_0 − e_1 lies in the kernel
    let dup = write(&dir, "dup.txt", "2 3\n1 1 0\n0 0 1\n");
    assert_eq!(
        angsep(&["nsp", "--matrix", s(&dup), "--support", "0"]).status.code(),
        Some(1)
    );
}

#[test]
fn rnsp_and_angle_and_rsv() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.txt", "2 3\n1 0 0.3\n0 1 -0.2\n");
    let cone = r#"{"variant": "l1_descent", "x0": [1, 0, 0]}"#;
    let ang = angsep(&[
        "angle",
        "--matrix",
        s(&a),
        "--cone",
        cone,
        "--method",
        "grid",
        "--res",
        "0.01",
    ]);
    assert_eq!(ang.status.code(), Some(0), "{}", String::from_utf8_lossy(&ang.stderr));
    let theta = json(&ang)["theta_star"].as_f64().unwrap();
    assert!(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2);
    let cone_file = write(&dir, "cone.json", cone);
    let rsv = angsep(&["rsv", "--matrix", s(&a), "--cone", s(&cone_file), "--seed", "3"]);
    assert_eq!(rsv.status.code(), Some(0));
    assert!(json(&rsv)["sigma"].as_f64().unwrap() > 0.0);
    let r = angsep(&[
        "rnsp",
        "--matrix",
        s(&a),
        "--support",
        "0",
        "--gamma",
        "0.5",
        "--tau",
        "0",
    ]);
    assert!(matches!(r.status.code(), Some(0 | 1)));
    assert!(json(&r)["holds"].is_boolean());
}

#[test]
fn solve_each_program() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.txt", MATRIX);
    let b = write(&dir, "b.txt", "1.0, 0.0, 0.0\n");
    for prog in ["p1", "p1eps", "p2", "p2eps"] {
        let out = angsep(&["solve", prog, "--matrix", s(&a), "--b", s(&b), "--eps", "0.1"]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{prog}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v = json(&out);
        assert_eq!(v["x_star"].as_array().unwrap().len(), 6);
        assert!(v["objective"].as_f64().unwrap() >= 0.0);
    }
    let csv = angsep(&["solve", "p1", "--matrix", s(&a), "--b", s(&b), "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().next().unwrap().split(',').any(|c| c == "objective"));
}

#[test]
fn width_statdim_and_mu() {
    let cone = r#"{"variant": "circular", "d": 10, "alpha": 0.5}"#;
    let w = angsep(&["width", "--cone", cone, "--samples", "2000", "--seed", "1"]);
    assert_eq!(w.status.code(), Some(0));
    assert_eq!(json(&w)["method"], "exact-support");
    let sd = angsep(&["statdim", "--cone", cone, "--samples", "2000"]);
    let v = json(&sd);
    assert!(v["mean"].as_f64().unwrap() > 0.0 && v["mean"].as_f64().unwrap() < 10.0);
    let mu = angsep(&[
        "mu",
        "--cross-polytope",
        "3",
        "--x0",
        "0.3,0.7,0",
        "--u",
        "0,0,1",
        "--samples",
        "2000",
    ]);
    assert_eq!(mu.status.code(), Some(0), "{}", String::from_utf8_lossy(&mu.stderr));
    assert!((json(&mu)["mu"].as_f64().unwrap() - 1.5f64.sqrt().recip()).abs() < 1e-3);
    let facet = angsep(&["mu", "--cross-polytope", "3", "--x0", "0.2,0.3,0.5", "--u", "1,-1,0"]);
    assert_eq!(facet.status.code(), Some(2));
}

#[test]
fn experiment_reruns_are_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"schema_version": 1, "experiment": "robustness", "m": 10, "d": 20, "s": 2, "trials": 4}"#,
    );
    let run = |out: &Path| {
        angsep(&[
            "experiment",
            "robustness",
            "--config",
            s(&cfg),
            "--seed",
            "7",
            "--out",
            s(out),
            "--single-thread",
        ])
    };
    let (p1, p2) = (dir.path().join("r1.json"), dir.path().join("r2.json"));
    assert_eq!(run(&p1).status.code(), Some(0));
    assert_eq!(run(&p2).status.code(), Some(0));
    let (r1, r2) = (fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    assert_eq!(r1, r2);
    let v: Value = serde_json::from_slice(&r1).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["passed"], true);
}

#[test]
fn experiment_writes_csv_and_svg() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"schema_version": 1, "experiment": "phase_sweep", "d": 10, "s": 1, "trials": 5, "m_values": [3, 6, 10], "samples": 2000}"#,
    );
    let (csv, svg) = (dir.path().join("p.csv"), dir.path().join("p.svg"));
    let out = angsep(&[
        "experiment",
        "phase_sweep",
        "--config",
        s(&cfg),
        "--csv",
        s(&csv),
        "--svg",
        s(&svg),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "m,stat_dim,success_rate,w_sq");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn usage_and_input_errors_exit_2() {
    let out = angsep(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(
        angsep(&["rip", "--matrix", "/nonexistent/a.txt", "--k", "1"])
            .status
            .code(),
        Some(2)
    );
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.txt", "2 2\n1 x\n0 1\n");
    assert_eq!(angsep(&["rip", "--matrix", s(&bad), "--k", "1"]).status.code(), Some(2));
    let cfg = write(&dir, "cfg.json", r#"{"schema_version": 1, "unknown_key": 3}"#);
    assert_eq!(
        angsep(&["experiment", "robustness", "--config", s(&cfg)]).status.code(),
        Some(2)
    );
    assert_eq!(angsep(&["experiment", "nope"]).status.code(), Some(2));
    assert_eq!(angsep(&["--help"]).status.code(), Some(0));
}

#[test]
fn dispatch_returns_codes_in_process() {
    assert_eq!(angsep_cli::dispatch(["angsep", "bogus"]), angsep_cli::EXIT_USAGE);
    assert_eq!(
        angsep_cli::dispatch(["angsep", "width", "--cone", "{}"]),
        angsep_cli::EXIT_USAGE
    );
}
