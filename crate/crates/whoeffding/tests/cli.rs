//! Black-box tests of the command-line interface: exit codes, seeded
//! reproducibility, config diagnostics, and report files on disk.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_whoeffding"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
    assert!(run(&["bound", "--help"]).status.success());
}

#[test]
fn bad_usage_exits_one() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["bound", "--model", "brownian", "--t", "10", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown model"));
    let out = run(&["tail", "--model", "ar1", "--x0", "0", "--t", "10", "--eps", "0.1", "--samples", "5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bound_output_is_stable_and_parsable() {
    let a = run(&["bound", "--model", "ar1", "--t", "100", "--eps", "0.5"]);
    assert!(a.status.success());
    let b = run(&["bound", "--model", "ar1", "--t", "100", "--eps", "0.5"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,functional,t,eps,gamma,bound,theta_star,regime"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "ar1");
    let bound: f64 = row[5].parse().unwrap();
    assert!((bound - 2.0 * (-1.44f64).exp()).abs() < 1e-12);

    let json = run(&["bound", "--model", "ar1", "--t", "100", "--eps", "0.5", "--format", "json"]);
    assert!(json.status.success());
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!((value["bound"].as_f64().unwrap() - bound).abs() < 1e-15);
    assert_eq!(value["regime"], "informative");
}

#[test]
fn tail_runs_are_byte_identical_per_seed() {
    let args = [
        "tail", "--model", "torus", "--x0", "0", "--t", "30", "--eps", "0.3",
        "--samples", "500", "--seed", "21",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn check_reports_and_exit_codes_follow_the_verdict() {
    let ok = run(&["check", "--model", "ar1"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(&["check", "--model", "torus"]);
    assert_eq!(bad.status.code(), Some(2));
    let text = String::from_utf8(bad.stdout).unwrap();
    assert!(text.contains("false"), "{text}");
}

#[test]
fn certify_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("good.conf");
    std::fs::write(
        &cfg,
        "model = ar1\nfunctional = identity\nx0 = 0\nt = 50\neps = 0.3\nsamples = 2000\nseed = 5\n",
    )
    .unwrap();
    let out = bin().arg("certify").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("good.csv")).unwrap();
    assert!(csv.starts_with("model,x0,t,eps,lip,sup_f,gamma,domain,bound,regime,p_hat,ci_lo,ci_hi,n,seed\n"));
    assert_eq!(csv.lines().count(), 2);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("good.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["outcome"]["all_pass"], true);
}

#[test]
fn certify_config_errors_point_at_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.conf");
    std::fs::write(&cfg, "model = ar1\nfunctional = identity\nx0 = zero\n").unwrap();
    let out = bin().arg("certify").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn gamma_and_subordinate_commands_round_trip() {
    let out = run(&["gamma", "--model", "flow", "--alpha", "1.5", "--format", "json"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((value["gamma"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);

    let out = run(&[
        "subordinate", "--model", "flow", "--sub", "poisson:1", "--t", "3", "--seed", "11",
        "--format", "json",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["domain"], "continuous");
    let expect = std::f64::consts::E / (std::f64::consts::E - 1.0);
    assert!((value["gamma"]["value"].as_f64().unwrap() - expect).abs() < 1e-7);

    let out = run(&["subordinate", "--model", "flow", "--t", "3"]);
    assert_eq!(out.status.code(), Some(1));
}
