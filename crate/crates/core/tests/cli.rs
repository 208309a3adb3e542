//! End-to-end runs of the `trapwalk` binary.

use std::process::{Command, Output};

use serde_json::Value;

fn trapwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trapwalk")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = trapwalk(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn num(v: &Value) -> (&str, &str) {
    (v["num"].as_str().unwrap(), v["den"].as_str().unwrap())
}

#[test]
fn analyze_small_table() {
    let v = json(&["analyze", "--sequence", "explicit:1,2,3", "--n", "3"]);
    assert_eq!(v["recursion"]["p"], serde_json::json!(["1", "3", "8"]));
    assert_eq!(v["recursion"]["q"], serde_json::json!(["1", "6", "20"]));
    assert_eq!(num(&v["recursion"]["a"][2]), ("5", "2"));
    assert_eq!(v["recursion"]["a"][2]["decimal"], "2.5");
}

#[test]
fn classify_geometric() {
    let v = json(&["classify", "--family", "geometric:rho=2,scale=1"]);
    assert_eq!(v["status"], "NonCritical");
    assert_eq!(v["rule"], "R1");
}

#[test]
fn solve_two_traps() {
    let v = json(&["solve", "--sequence", "explicit:1,2", "--N", "2"]);
    assert_eq!(num(&v["A"]), ("2", "1"));
    assert_eq!(num(&v["E"][0]), ("1", "1"));
    assert_eq!(num(&v["E"][1]), ("0", "1"));
}

#[test]
fn solve_domain_csv() {
    let out = trapwalk(&["solve", "--domain", "0..2", "--traps", "1", "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "x,E,E_decimal\n0,0,0\n1,1,1\n2,0,0\n");
}

#[test]
fn output_is_deterministic() {
    let args = ["simulate", "--domain", "-5..5", "--traps", "-2,1", "--start", "0", "--samples", "5000", "--seed", "4"];
    let a = trapwalk(&args);
    let b = trapwalk(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = trapwalk(&[&args[..], &["--workers", "1"]].concat());
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("trapwalk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ce.csv");
    let out = trapwalk(&[
        "construct-counterexample",
        "--bound",
        "geometric:rho=3",
        "--jumps",
        "1",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("i,a_i,b_i,x_b_plus_1,v_i,v_i_decimal,t_i\n1,1,18,387420489,"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn module_errors_exit_one_with_json() {
    let out = trapwalk(&["analyze", "--sequence", "explicit:3,2", "--n", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["code"], "NonMonotonic");

    let out = trapwalk(&["construct-counterexample", "--bound", "geometric:rho=2", "--horizon", "2000"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["code"], "TargetUnreachable");
}

#[test]
fn parse_errors_exit_two() {
    assert_eq!(trapwalk(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(trapwalk(&["analyze", "--n", "3"]).status.code(), Some(2));
    let out = trapwalk(&["analyze", "--sequence", "nonsense:1", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["code"], "Parse");
}

#[test]
fn digit_budget_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_trapwalk"))
        .args(["analyze", "--sequence", "double-exp:lambda=1,a=2", "--n", "12"])
        .env("TRAPWALK_DIGIT_BUDGET", "50")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["code"], "DigitBudgetExceeded");
}

#[test]
fn verify_table_passes() {
    let out = trapwalk(&["verify", "--samples", "5000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn sandpile_reports_green_entries() {
    let v = json(&["sandpile", "--volume", "1", "--traps", "0", "--steps", "20000", "--seed", "2"]);
    assert_eq!(v["green"].as_array().unwrap().len(), 9);
    assert_eq!(v["conserved"], true);
}
