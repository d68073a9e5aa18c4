use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixture-ldp")).args(args).output().expect("binary runs")
}

fn run_fixture(cmd: &str, name: &str, extra: &[&str]) -> Output {
    let path = fixture(name);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn field(v: &Value) -> f64 {
    match v {
        Value::Number(n) => n.as_f64().unwrap(),
        Value::String(s) if s == "inf" => f64::INFINITY,
        other => panic!("not a number: {other}"),
    }
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn rate_curve_fixture_a() {
    let o = run_fixture("rate-curve", "fixture_a.json", &["--r-min", "-0.1", "--r-max", "1.1", "--points", "25"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("r,H,branch,lambda_star,p1,p2"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 25);
    for row in &rows {
        let r: f64 = row[0].parse().unwrap();
        if !(-1e-12..=1.0 + 1e-12).contains(&r) {
            assert_eq!(row[1], "inf");
            assert_eq!(row[2], "outside");
        }
    }
    let mid = &rows[12];
    assert!((mid[0].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    assert!(mid[1].parse::<f64>().unwrap() <= 1e-8);
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("r0 = 5.00000000000e-1"));
    assert!(stderr.contains("curvature at r0 = 4.00000000000e0"));
}

#[test]
fn rate_curve_fixture_b_vanishes_near_r0() {
    let o = run_fixture("rate-curve", "fixture_b.json", &["--points", "201"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    let nearest = rows
        .iter()
        .min_by(|a, b| {
            let d = |row: &Vec<String>| (row[0].parse::<f64>().unwrap() - 2.05362).abs();
            d(a).total_cmp(&d(b))
        })
        .unwrap();
    assert!(nearest[1].parse::<f64>().unwrap() <= 1e-4);
}

#[test]
fn unsupported_expected_shortfall_exits_3_with_reason() {
    let o = run_fixture("rate-curve", "es_unequal.json", &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr).unwrap().contains("ES requires common α-quantile"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"risk_measure": {"kind": "mean"}, "components": [], "weights": [0.4, 0.4]}"#).unwrap();
    assert_eq!(run(&["rate-curve", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["rate-curve", "/nonexistent/config.json"]).status.code(), Some(2));
    assert_eq!(run_fixture("rate-curve", "fixture_a.json", &["--points", "1"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_mixture-ldp"))
        .args(["curvature", fixture("fixture_a.json").to_str().unwrap()])
        .env("MIXTURE_LDP_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_check_passes_on_fixtures() {
    let o = run_fixture("oracle-check", "fixture_a.json", &["--resolution", "400"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!(field(&v["max_deviation_condition"]) < 0.01);
    assert!(field(&v["max_deviation_general"]) < 0.01);
    assert_eq!(v["flagged"], 0);
    assert_eq!(run_fixture("oracle-check", "fixture_d.json", &["--resolution", "200"]).status.code(), Some(0));
}

#[test]
fn oracle_check_negative_control_exits_4() {
    let o = run_fixture("oracle-check", "fixture_a.json", &["--negative-control"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(json(&o)["flagged"].as_u64().unwrap() > 0);
}

#[test]
fn simulate_exact_binomial_summary() {
    let o = run_fixture("simulate", "fixture_a.json", &["--delta", "0.25", "--exact-binomial", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let ratio = field(&v["summary"]["ratio"]);
    assert!((1.0..=1.3).contains(&ratio), "ratio {ratio}");
    assert!((field(&v["summary"]["h_delta"]) - 0.13081).abs() < 1e-5);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn simulate_impossible_deviation_exits_5() {
    assert_eq!(run_fixture("simulate", "fixture_a.json", &["--delta", "0.6", "--exact-binomial"]).status.code(), Some(5));
}

#[test]
fn simulate_is_reproducible() {
    let args = ["--delta", "0.15", "--n-grid", "20,40", "--replicas", "2000", "--seed", "8"];
    let a = run_fixture("simulate", "fixture_b.json", &args);
    let b = run_fixture("simulate", "fixture_b.json", &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run_fixture("simulate", "fixture_b.json", &["--delta", "0.15", "--n-grid", "20,40", "--replicas", "2000", "--seed", "9"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn curvature_and_closed_forms() {
    let v = json(&run_fixture("curvature", "fixture_c.json", &[]));
    assert!((field(&v["curvature"]) - 4.6827).abs() < 1e-3);
    assert!(field(&v["relative_error"]) < 1e-3);
    for name in ["fixture_a.json", "fixture_b.json", "fixture_c.json", "fixture_d.json"] {
        let o = run_fixture("closed-form-check", name, &[]);
        assert_eq!(o.status.code(), Some(0), "{name}");
        assert!(field(&json(&o)["max_abs_deviation"]) <= 1e-8);
    }
    assert_eq!(run_fixture("curvature", "degenerate.json", &[]).status.code(), Some(1));
}

#[test]
fn config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_fixture("rate-curve", "fixture_b.json", &["--format", "json", "--points", "9", "--r-min", "1.6"]);
    let echoed = json(&first)["config"].clone();
    let path = dir.path().join("echo.json");
    std::fs::write(&path, serde_json::to_string(&echoed).unwrap()).unwrap();
    let second = run(&["rate-curve", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(json(&second), json(&first));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = run_fixture("rate-curve", "fixture_d.json", &["--points", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().next(), Some("r,H,branch,lambda_star,p1,p2,p3"));
    assert_eq!(text.lines().count(), 6);
}
