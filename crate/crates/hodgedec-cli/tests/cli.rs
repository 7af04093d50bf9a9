//! Black-box tests of the binary: exit codes, report output, the `--out`
//! flag, and field-file round trips.

use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hodgedec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn passing_suite_exits_zero_with_json_report() {
    let out = run(&[
        "verify-towers",
        "--n-max",
        "2",
        "--k-max",
        "1",
        "--points",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is a JSON report");
    assert_eq!(report["command"], "verify-towers");
    assert_eq!(report["passed"], true);
    assert!(report["records"].as_array().is_some_and(|r| !r.is_empty()));
}

#[test]
fn usage_and_config_errors_exit_two() {
    // clap rejects an unknown medium spec
    let out = run(&["decompose", "--medium", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("medium"));

    // clap rejects a grid with the wrong arity
    let out = run(&["decompose", "--grid", "1,32,48"]);
    assert_eq!(out.status.code(), Some(2));

    // in-range parse, out-of-range configuration
    let out = run(&["verify-towers", "--n-max", "9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at most 8"));
}

#[test]
fn failed_check_exits_one() {
    // the minimal shell is too coarse for the recovery tolerance, so the
    // report itself (not the configuration) fails
    let out = run(&[
        "decompose",
        "--input",
        "manufactured-mix",
        "--grid",
        "1,16,16,2",
        "--s",
        "1",
        "--tol",
        "1e-8",
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("checks failed"));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).expect("report printed");
    assert_eq!(report["passed"], false);
}

#[test]
fn correction_flag_takes_an_explicit_value() {
    let out = run(&[
        "decompose",
        "--input",
        "manufactured-mix",
        "--grid",
        "1,32,32,4",
        "--s",
        "2",
        "--correction",
        "on",
        "--tol",
        "1e-8",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["config"]["correction"], "true");
    let names: Vec<&str> = report["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"correction-dimension"));
    assert!(names.contains(&"coefficient-recovery"));

    // the value is mandatory: a bare flag is a usage error
    let out = run(&["decompose", "--correction"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_duplicates_stdout_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "dims",
        "--s-list",
        "1,-1",
        "--q-list",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let written = fs::read(&path).unwrap();
    assert_eq!(written, out.stdout);
}

#[test]
fn field_files_round_trip_and_reject_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let parts = dir.path().join("parts");
    let out = run(&[
        "decompose",
        "--input",
        "dirichlet-ball",
        "--grid",
        "1,16,16,2",
        "--tol",
        "1e-8",
        "--parts-dir",
        parts.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let input_csv = parts.join("input.csv");
    assert!(input_csv.is_file());
    assert!(parts.join("grad_part.csv").is_file());
    assert!(parts.join("sol_part.csv").is_file());
    assert!(parts.join("potential.csv").is_file());

    // the written field decomposes again; the grid comes from the header
    let out = run(&[
        "decompose",
        "--input",
        input_csv.to_str().unwrap(),
        "--tol",
        "1e-8",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        report["config"]["input"],
        format!("file:{}", input_csv.display())
    );

    // corrupt one data row: the reader names the offending line
    let text = fs::read_to_string(&input_csv).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[2] = "not,a,valid,row";
    let corrupted = dir.path().join("corrupted.csv");
    fs::write(&corrupted, lines.join("\n")).unwrap();
    let out = run(&["decompose", "--input", corrupted.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "stderr: {}", stderr(&out));
}
