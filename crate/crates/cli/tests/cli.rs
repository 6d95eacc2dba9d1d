//! End-to-end runs of the `btt` binary on job files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn btt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btt"))
        .args(args)
        .output()
        .expect("btt runs")
}

fn write_job(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn count_c2_over_q_sqrt_minus_5() {
    let dir = TempDir::new().unwrap();
    let job = write_job(
        &dir,
        "c2.json",
        r#"{"field": "Q(sqrt(-5))", "group": {"type": "cyclic", "n": 2}}"#,
    );
    let out = btt(&["count", "--job", p(&job)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["count"], 8);
    assert_eq!(v["theorem"], "t5");
}

#[test]
fn enumerate_c3_over_q() {
    let dir = TempDir::new().unwrap();
    let job = write_job(
        &dir,
        "c3.json",
        r#"{"field": "Q", "group": {"type": "cyclic", "n": 3}}"#,
    );
    let out = btt(&["enumerate", "--job", p(&job)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["count"], 1);
    assert_eq!(v["theorem"], "p42");
    assert_eq!(v["representatives"].as_array().unwrap().len(), 1);
}

#[test]
fn parameterized_field_and_explicit_generators() {
    let dir = TempDir::new().unwrap();
    let job = write_job(
        &dir,
        "c6.json",
        r#"{"field": {"d": -15}, "group": {"type": "cyclic", "n": 6}, "generators": [[["0", "1"], ["-1", "1"]]]}"#,
    );
    let out = btt(&["count", "--job", p(&job)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["count"]["multiplier"], 1);
}

#[test]
fn unknown_job_key_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let job = write_job(
        &dir,
        "bad.json",
        r#"{"field": "Q", "group": {"type": "cyclic", "n": 2}, "bogus": 1}"#,
    );
    let out = btt(&["count", "--job", p(&job)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"], "schema");
}

#[test]
fn higher_degree_field_is_unsupported() {
    let dir = TempDir::new().unwrap();
    let job = write_job(
        &dir,
        "z5.json",
        r#"{"field": "Q(zeta(5))", "group": {"type": "cyclic", "n": 5}}"#,
    );
    let out = btt(&["count", "--job", p(&job)]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"], "unsupported");
}

#[test]
fn symbolic_count_cannot_be_enumerated() {
    let dir = TempDir::new().unwrap();
    let job = write_job(
        &dir,
        "c4.json",
        r#"{"field": "Q(sqrt(-5))", "group": {"type": "cyclic", "n": 4}}"#,
    );
    let out = btt(&["enumerate", "--job", p(&job)]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    assert_eq!(v["error"], "symbolic");
    assert_eq!(v["report"]["count"]["symbol"], "h_{L/K}");
}

#[test]
fn branch_writes_dot_file() {
    let dir = TempDir::new().unwrap();
    let job = write_job(
        &dir,
        "q8.json",
        r#"{"field": "Q(i)", "group": {"type": "quaternion8"}}"#,
    );
    let dot = dir.path().join("q8.dot");
    let out = btt(&[
        "branch",
        "--job",
        p(&job),
        "--place",
        "P2",
        "--dot",
        p(&dot),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["vertices"].as_array().unwrap().len(), 4);
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph "));
    assert_eq!(text.matches(" -> ").count(), 3);
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let job = write_job(
        &dir,
        "d4.json",
        r#"{"field": "Q(sqrt(-5))", "group": {"type": "dihedral", "n": 4}}"#,
    );
    let first = btt(&["enumerate", "--job", p(&job)]);
    let second = btt(&["enumerate", "--job", p(&job)]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn field_info_lists_class_group() {
    let out = btt(&["field-info", "--field", "Q(sqrt(-5))"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["class_number"], 2);
    assert_eq!(v["discriminant"], -20);
}

#[test]
fn verify_paper_filter_selects_table() {
    let out = btt(&["verify-paper", "--filter", "table1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("table1.")).count(), 5);
}

#[test]
fn verify_paper_reports_known_discrepancies() {
    let out = btt(&["verify-paper"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["abelian.c6-over-q15", "rotation.branch", "rotation.total"] {
        let line = text.lines().find(|l| l.contains(name)).unwrap();
        assert!(line.contains("FAIL"), "{line}");
    }
}
