use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_injbound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn injbound")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}, stderr {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json output")
}

const IDENTITY: &str = r#"{"tensors":[{"shape":[2,2],"data":[1,0,0,1]}],"coeff_dist":"gaussian"}"#;

#[test]
fn optimized_bound_reports_beta_and_sandwich() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "id.json", IDENTITY);
    let out = run(&["bound", "--model", model.to_str().unwrap(), "--optimize-beta", "--format", "json"]);
    let v = json_stdout(&out);
    let bound = &v["report"]["bound"];
    let beta = bound["beta"].as_f64().unwrap();
    assert!((beta - 2f64.sqrt()).abs() < 1e-6, "beta {beta}");
    // sqrt((2 + 2 sqrt 2) * 2)
    let expected = ((2.0 + 2.0 * 2f64.sqrt()) * 2.0).sqrt();
    assert!((bound["bound"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert_eq!(bound["sandwich"]["holds"], Value::Bool(true));
    assert_eq!(v["header"]["command"], "bound");
    assert_eq!(v["header"]["p"], "2");
}

#[test]
fn fixed_beta_matches_formula() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "id.json", IDENTITY);
    let out = run(&["bound", "--model", model.to_str().unwrap(), "--beta", "1", "--format", "json"]);
    let v = json_stdout(&out);
    // a = (1, 2, 2), beta = 1: sqrt(5 * 2)
    let b = v["report"]["bound"]["bound"].as_f64().unwrap();
    assert!((b - 10f64.sqrt()).abs() < 1e-9, "{b}");
}

#[test]
fn zero_model_estimates_zero() {
    let dir = TempDir::new().unwrap();
    let model = write(
        dir.path(),
        "zero.json",
        r#"{"tensors":[{"shape":[2,2],"data":[0,0,0,0]}],"coeff_dist":"rademacher"}"#,
    );
    let out = run(&["estimate", "--model", model.to_str().unwrap(), "--trials", "50", "--format", "json"]);
    let v = json_stdout(&out);
    assert_eq!(v["report"]["estimate"]["mean"].as_f64(), Some(0.0));
    assert_eq!(v["report"]["estimate"]["stderr"].as_f64(), Some(0.0));
    assert_eq!(v["report"]["provenance"], "empirical");
}

#[test]
fn parse_error_reports_byte_offset() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "bad.json", "{\n  \"tensors\": [\n    oops\n");
    let out = run(&["bound", "--model", model.to_str().unwrap(), "--optimize-beta"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("byte 21"), "{err}");
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn invalid_model_is_rejected() {
    let dir = TempDir::new().unwrap();
    let model = write(
        dir.path(),
        "mixed.json",
        r#"{"tensors":[{"shape":[2,2],"data":[1,0,0,1]},{"shape":[3],"data":[1,2,3]}],"coeff_dist":"gaussian"}"#,
    );
    let out = run(&["bound", "--model", model.to_str().unwrap(), "--optimize-beta"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "id.json", IDENTITY);
    let m = model.to_str().unwrap();
    for args in [
        vec!["bound", "--model", m],
        vec!["bound", "--model", m, "--p", "0.5", "--optimize-beta"],
        vec!["bound", "--model", m, "--bound", "matrix", "--p", "inf"],
        vec!["bound", "--model", m, "--beta", "-1"],
        vec!["check", "--suite", "nonsense"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&["bound", "--model", dir.path().join("missing.json").to_str().unwrap(), "--optimize-beta"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sandwich_suite_holds() {
    let out = run(&["check", "--suite", "appendixB", "--samples", "100", "--format", "json"]);
    let v = json_stdout(&out);
    let suite = &v["suites"][0];
    assert_eq!(suite["holds"].as_u64(), Some(100));
    assert_eq!(suite["fails"].as_u64(), Some(0));
}

#[test]
fn chaos_second_moment_tracks_frobenius() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", r#"{"shape":[2,2],"data":[1,2,3,4]}"#);
    let out = run(&[
        "chaos", "--tensor", a.to_str().unwrap(), "--moment-p", "2", "--trials", "40000", "--format", "json",
    ]);
    let v = json_stdout(&out);
    let est = &v["report"]["moment"]["estimate"];
    let (mean, se) = (est["mean"].as_f64().unwrap(), est["stderr"].as_f64().unwrap());
    let frob = 30f64.sqrt();
    assert!((mean - frob).abs() < 4.0 * se, "{mean} +- {se} vs {frob}");
    assert!(v["report"]["latala_bound"]["value"].as_f64().unwrap() >= mean);
}

#[test]
fn compare_is_thread_count_independent() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "id.json", IDENTITY);
    let b = write(
        dir.path(),
        "mixed.json",
        r#"{"tensors":[{"shape":[2,2],"data":[1,2,0,1]},{"shape":[2,2],"data":[0,1,1,0]}],"coeff_dist":"rademacher"}"#,
    );
    let args = [
        "compare",
        "--model",
        a.to_str().unwrap(),
        "--model",
        b.to_str().unwrap(),
        "--trials",
        "300",
        "--format",
        "csv",
    ];
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = bin().args(args).env("RAYON_NUM_THREADS", threads).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(out.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("model_id,p,trials"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn table_is_default_format() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "id.json", IDENTITY);
    let out = run(&["bound", "--model", model.to_str().unwrap(), "--bound", "cor2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("command: bound"));
    assert!(text.contains("bound.kind"));
}
