use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ricci-lab"))
}

fn run_config(dir: &Path, name: &str, text: &str) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{name}.toml"));
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join(format!("{name}.csv"));
    let o = bin().arg("run").arg(&cfg).arg("-o").arg(&out).output().unwrap();
    (o, out)
}

/// Parses CSV rows into header-keyed maps.
fn rows(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| header.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

const HEADER: &str = "experiment,space,params,estimate,stderr,reference,lower,upper,pass,seconds";

#[test]
fn unknown_flag_is_usage_error() {
    let o = bin().arg("--frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn empty_config_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(dir.path(), "empty", "");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out).unwrap(), format!("{HEADER}\n"));
}

#[test]
fn config_error_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[[experiment]]\nid = \"bad\"\nkind = \"eta\"\nspace = \"euclidean(2)\"\nx = [0, 0]\ny = [1, 0]\neps = \"tenth\"\n";
    let (o, out) = run_config(dir.path(), "bad", text);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`eps`") && err.contains("bad"), "{err}");
    assert!(!out.exists());

    let (o, _) = run_config(dir.path(), "missing", "[[experiment]]\nid = \"m\"\nkind = \"robust\"\nspace = \"sphere(1)\"\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`x`"));
}

#[test]
fn unknown_suite_or_file_is_usage_error() {
    let o = bin().args(["run", "no-such-suite"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lists_every_acceptance_suite() {
    let o = bin().arg("list-suites").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 10);
    for i in 1..=10 {
        let line = text.lines().find(|l| l.starts_with(&format!("ac{i}-"))).unwrap_or_else(|| panic!("ac{i} missing"));
        let file = line.split_whitespace().last().unwrap();
        assert!(Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(file).exists(), "{file}");
    }
}

const QUICK: &str = r#"
[[experiment]]
id = "b-metric"
kind = "invariant-suite"
suite = "metric"
instances = 3
seed = 5

[[experiment]]
id = "a-duality"
kind = "invariant-suite"
suite = "duality"
instances = 3
seed = 5

[[experiment]]
id = "c-never"
kind = "invariant-suite"
suite = "metric"
instances = 1
max-seconds = 0.0
"#;

#[test]
fn output_is_sorted_deterministic_and_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (o1, f1) = run_config(dir.path(), "one", QUICK);
    let (o2, f2) = run_config(dir.path(), "two", QUICK);
    // c-never has no time budget, so the run fails.
    assert_eq!(o1.status.code(), Some(1));
    assert_eq!(o2.status.code(), Some(1));
    let a = std::fs::read(&f1).unwrap();
    assert_eq!(a, std::fs::read(&f2).unwrap());
    let r = rows(&f1);
    let ids: Vec<&str> = r.iter().map(|r| r["experiment"].as_str()).collect();
    assert_eq!(ids, ["a-duality", "b-metric", "c-never"]);
    assert_eq!(r[0]["pass"], "true");
    assert_eq!(r[0]["reference"], "no-reference");
    assert_eq!(r[0]["seconds"], "-");
}

#[test]
fn cone_coefficient_row_for_pi() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(dir.path(), "cone", "[[experiment]]\nid = \"cone\"\nkind = \"cone-coefficient\"\nalpha = \"pi\"\n");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &rows(&out)[0];
    let reference: f64 = r["reference"].parse().unwrap();
    assert!((reference - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-9, "{reference}");
    let est: f64 = r["estimate"].parse().unwrap();
    assert!((est / reference - 1.0).abs() <= 0.05, "{est}");
    assert_eq!(r["pass"], "true");
}

#[test]
fn sandwich_row_on_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[[experiment]]\nid = \"s\"\nkind = \"sandwich\"\nspace = \"sphere(1)\"\nx = [\"pi/4\", 0.3]\ny = [\"3pi/4\", 0.3]\ntolerance = 0.1\n";
    let (o, out) = run_config(dir.path(), "sandwich", text);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &rows(&out)[0];
    let lower: f64 = r["lower"].parse().unwrap();
    let upper: f64 = r["upper"].parse().unwrap();
    assert!((lower - 1.0).abs() < 1e-12 && (upper - 2.0).abs() < 1e-9, "{lower} {upper}");
    assert_eq!(r["pass"], "true");
}
