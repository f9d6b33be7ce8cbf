use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ustatlab");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn sign_kernel(dir: &Path) -> PathBuf {
    write(dir, "sign.json", r#"{"format":1,"d":2,"m":2,"q":1,"probs":[0.5,0.5],"values":[1,-1,-1,1],"symmetric":true}"#)
}

/// Data rows of a CSV report as (quantity, value, flag).
fn rows(out: &Output) -> Vec<(String, String, String)> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    rdr.records().map(|r| {
        let r = r.unwrap();
        (r[6].to_string(), r[7].to_string(), r[10].to_string())
    }).collect()
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(rows(&out).iter().all(|(_, _, flag)| flag == "pass"));
}

#[test]
fn constant_kernel_projects_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let k = write(dir.path(), "c.json", r#"{"format":1,"d":2,"m":2,"q":1,"probs":[0.5,0.5],"values":[1,1,1,1]}"#);
    let saved = dir.path().join("pi.json");
    let out = run(&["project", k.to_str().unwrap(), "--save", saved.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("# summary.input_canonical=false"));
    assert!(text.contains("# summary.projected_canonical=true"));
    assert!(rows(&out).iter().all(|(q, v, _)| q == "pi_h" && v == "0"));
    let saved = std::fs::read_to_string(saved).unwrap();
    let back = ustatlab_core::Kernel::from_json(&saved).unwrap();
    assert!(back.values().iter().all(|v| *v == 0.0));
}

#[test]
fn sign_kernel_has_unit_norms() {
    let dir = tempfile::tempdir().unwrap();
    let k = sign_kernel(dir.path());
    let out = run(&["norms", k.to_str().unwrap()]);
    assert!(out.status.success());
    let norms = rows(&out);
    assert_eq!(norms.len(), 5);
    for (_, v, flag) in norms {
        assert!((v.parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(flag, "converged");
    }
}

#[test]
fn text_summary_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let k = sign_kernel(dir.path());
    let target = dir.path().join("report.txt");
    let out = run(&["norms", k.to_str().unwrap(), "--format", "text-summary", "--out", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(target).unwrap();
    assert!(text.starts_with("ustatlab norms\n"));
    assert!(text.contains("rows: 5"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["norms", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.json", r#"{"format":1,"d":2,"m":2,"q":1,"probs":[0.5,0.6],"values":[1,1,1,1]}"#);
    assert_eq!(run(&["norms", bad.to_str().unwrap()]).status.code(), Some(2));
    let k = sign_kernel(dir.path());
    assert_eq!(run(&["norms", k.to_str().unwrap(), "--spec", "K=1;J=1"]).status.code(), Some(2));
    assert_eq!(run(&["bounds", k.to_str().unwrap(), "--p", "1"]).status.code(), Some(2));
}

#[test]
fn guard_violations_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let k = sign_kernel(dir.path());
    let out = run(&["simulate", k.to_str().unwrap(), "--n", "64", "--p", "2", "--exact"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(run(&["simulate", k.to_str().unwrap(), "--lil-nmax", "40"]).status.code(), Some(3));
}

#[test]
fn seed_changes_monte_carlo_output() {
    let dir = tempfile::tempdir().unwrap();
    let k = sign_kernel(dir.path());
    let k = k.to_str().unwrap();
    let a = run(&["simulate", k, "--n", "8", "--p", "2", "--reps", "64", "--seed", "1"]);
    let b = run(&["simulate", k, "--n", "8", "--p", "2", "--reps", "64", "--seed", "2"]);
    let c = run(&["simulate", k, "--n", "8", "--p", "2", "--reps", "64", "--seed", "1", "--threads", "3"]);
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}
