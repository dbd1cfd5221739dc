//! End-to-end tests of the binary: exit codes, file outputs, and
//! reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sitnikov"))
}

fn run(args: &[&str], out: &Path) -> Output {
    let mut all: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    all.push("--out".into());
    all.push(out.display().to_string());
    bin().args(&all).output().expect("binary runs")
}

#[test]
fn certify_builtin_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["certify", "--builtin", "circular:2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("certificate.json")).unwrap();
    assert!(text.contains("\"passed\": true"));
    assert!(text.contains("config_hash"));
}

#[test]
fn malformed_csv_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "t,x1,y1\n0.0,nonsense,0.2\n").unwrap();
    let side = dir.path().join("bad.json");
    std::fs::write(
        &side,
        r#"{"masses":[1.0],"d":2,"zeta1":[1],"zeta2":[1],"R":[[1.0,0.0],[0.0,-1.0]]}"#,
    )
    .unwrap();
    let out = run(
        &[
            "certify",
            "--file",
            csv.to_str().unwrap(),
            "--spec",
            side.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_builtin_and_bad_eccentricity_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bounds", "--builtin", "hexagon:9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["bounds", "--builtin", "kepler:1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_range_seed_exits_one_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["seed", "--builtin", "circular:2", "--p", "7", "--q", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sqrt(beta)"), "stderr: {err}");
}

#[test]
fn seed_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["seed", "--builtin", "circular:2", "--p", "3", "--q", "1"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let profile = dir.path().join("seed_p3_q1.csv");
    assert!(profile.exists());
    let out = run(
        &[
            "verify",
            "--builtin",
            "circular:2",
            "--profile",
            profile.to_str().unwrap(),
            "--p",
            "3",
            "--q",
            "1",
            "--lambda",
            "0.0",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("passed = true"), "stdout: {stdout}");
}

#[test]
fn pipeline_writes_summary_and_handles_no_seed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "pipeline",
            "--builtin",
            "circular:2",
            "--p",
            "1,7",
            "--q",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("reached-lambda-one"));
    assert!(stdout.contains("no-seed"));
    for file in [
        "summary.json",
        "certificate.json",
        "bounds.json",
        "branch_p1_q1.jsonl",
        "profile_p1_q1.csv",
        "verify_p1_q1.json",
        "spectrum_q1_lambda0.json",
        "spectrum_q1_lambda0_5.json",
        "spectrum_q1_lambda1.json",
    ] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
}

#[test]
fn reruns_reproduce_identical_bytes() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = run(
            &[
                "pipeline",
                "--builtin",
                "circular:2",
                "--p",
                "1",
                "--q",
                "1",
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    for file in ["summary.json", "branch_p1_q1.jsonl", "profile_p1_q1.csv"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn nbody_command_integrates_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = 2.0_f64.powf(-5.0 / 3.0);
    let ics = dir.path().join("ics.json");
    std::fs::write(
        &ics,
        format!(
            r#"{{"masses":[0.5,0.5],"positions":[[{a},0.0],[-{a},0.0]],"velocities":[[0.0,{v}],[0.0,-{v}]]}}"#,
            a = a,
            v = 2.0 * a
        ),
    )
    .unwrap();
    let out = run(&["nbody", "--ics", ics.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("nbody_run.json")).unwrap(),
    )
    .unwrap();
    let closure = stats["payload"]["closure_residual"].as_f64().unwrap();
    assert!(closure < 1e-9, "closure {closure}");
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn period_table_has_expected_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "period-table",
            "--builtin",
            "circular:2",
            "--count",
            "12",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("period_table.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("E,zeta,T"));
    assert_eq!(lines.count(), 12);
}

#[test]
fn ingested_file_certifies_and_continues() {
    // Sample the circular pair to files, then run the pipeline from them.
    let dir = tempfile::tempdir().unwrap();
    let pi = std::f64::consts::PI;
    let a = 2.0_f64.powf(-5.0 / 3.0);
    let rows = 256;
    let mut csv = String::from("t,x1,y1,x2,y2\n");
    for k in 0..=rows {
        let t = k as f64 * pi / rows as f64;
        let (s, c) = (2.0 * t).sin_cos();
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            t,
            a * c,
            a * s,
            -a * c,
            -a * s
        ));
    }
    let csv_path = dir.path().join("pair.csv");
    std::fs::write(&csv_path, csv).unwrap();
    std::fs::write(
        dir.path().join("pair.json"),
        r#"{"masses":[0.5,0.5],"d":2,"zeta1":[2,1],"zeta2":[1,2],"R":[[1.0,0.0],[0.0,-1.0]]}"#,
    )
    .unwrap();
    let out = run(
        &[
            "continue",
            "--ensemble",
            csv_path.to_str().unwrap(),
            "--p",
            "1",
            "--q",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("reached-lambda-one"), "stdout: {stdout}");
}
