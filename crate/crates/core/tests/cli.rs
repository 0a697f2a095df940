//! End-to-end runs of the command-line binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use organic_mediation::cli::{read_csv, write_csv};
use organic_mediation::scm_sim::{simulate_observed, ScmSpec};
use organic_mediation::{Dataset, ObservedRecord};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_organic-mediation"))
}

fn spec_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/linear_gaussian.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn write_dataset(dir: &Path, name: &str, ds: &Dataset) -> String {
    let path = dir.join(name);
    write_csv(ds, &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn constant_outcome_gives_zero_effects() {
    let dir = tempfile::tempdir().unwrap();
    let recs = (0..40)
        .map(|i| {
            let x = i as f64;
            ObservedRecord::new((i % 2) as u8, vec![(x * 0.37).sin()], vec![(x * 0.91).cos()], x * 0.1 + (x * 1.3).sin(), 3.0)
        })
        .collect();
    let data = write_dataset(dir.path(), "d.csv", &Dataset::new(1, 1, recs));
    let v = json_of(&run(&["estimate", "--data", &data, "--format", "json"]));
    for key in ["ey0", "ey1", "ey1I"] {
        assert!((v[key].as_f64().unwrap() - 3.0).abs() < 1e-12, "{key}: {}", v[key]);
    }
    for key in ["organic_direct", "organic_indirect"] {
        assert!(v[key].as_f64().unwrap().abs() < 1e-12, "{key}: {}", v[key]);
    }
}

#[test]
fn estimate_json_schema_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate_observed(&ScmSpec::example_linear_gaussian(), 400, 7).unwrap();
    let data = write_dataset(dir.path(), "d.csv", &ds);
    for estimator in ["parametric", "discrete", "both"] {
        let mut args = vec!["estimate", "--data", &data, "--format", "json", "--estimator", estimator];
        if estimator != "parametric" {
            args.extend(["--bins", "c=2,l=2,m=2"]);
        }
        let v = json_of(&run(&args));
        for key in ["ey0", "ey1", "ey1I", "organic_direct", "organic_indirect"] {
            assert!(v[key].is_number(), "{estimator}: {key} missing");
        }
        if estimator == "both" {
            assert!(v["discrete"]["ey1I"].is_number());
        }
    }
}

#[test]
fn simulate_and_oracle_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_path();
    let spec = spec.to_str().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&["simulate", "--spec", spec, "--n", "500", "--seed", "42", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let oracle = || run(&["oracle", "--spec", spec, "--n", "2000", "--seed", "42", "--format", "json"]).stdout;
    let first = oracle();
    assert_eq!(first, oracle());
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["closed_form_status"], "exact");
    assert_eq!(v["closed_form"]["ey1I"].as_f64().unwrap(), 2.0);
}

#[test]
fn estimate_with_bootstrap_is_byte_identical_across_runs() {
    let spec = spec_path();
    let spec = spec.to_str().unwrap();
    let args = [
        "estimate", "--spec", spec, "--n", "600", "--seed", "5", "--bootstrap", "50", "--format", "json",
    ];
    let first = run(&args);
    let v = json_of(&first);
    assert_eq!(v["bootstrap"]["b"], 50);
    assert_eq!(first.stdout, run(&args).stdout);
}

#[test]
fn simulate_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_path();
    let out = dir.path().join("d.csv");
    let o = run(&[
        "simulate", "--spec", spec.to_str().unwrap(), "--n", "300", "--seed", "9", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let spec = ScmSpec::from_json(&std::fs::read_to_string(spec_path()).unwrap()).unwrap();
    let expected = simulate_observed(&spec, 300, 9).unwrap();
    let back = read_csv(&out).unwrap();
    assert_eq!((back.k(), back.p(), back.len()), (1, 1, 300));
    for (x, y) in back.records().iter().zip(expected.records()) {
        assert_eq!(x.a, y.a);
        let pairs = x.c.iter().chain(&x.l).chain([&x.m, &x.y]).zip(y.c.iter().chain(&y.l).chain([&y.m, &y.y]));
        for (u, v) in pairs {
            assert!((u - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }
}

#[test]
fn positivity_gap_names_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![
        ObservedRecord::new(0, vec![], vec![0.0], 0.0, 1.0),
        ObservedRecord::new(0, vec![], vec![1.0], 1.0, 2.0),
        ObservedRecord::new(1, vec![], vec![1.0], 0.0, 3.0),
        ObservedRecord::new(1, vec![], vec![1.0], 0.0, 4.0),
    ];
    let data = write_dataset(dir.path(), "gap.csv", &Dataset::new(0, 1, recs));
    let o = run(&["identify", "--data", &data]);
    assert_eq!(o.status.code(), Some(12));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("IdentificationGap"), "{err}");
    assert!(err.contains("(m=1,l=1)"), "{err}");
}

#[test]
fn non_binary_treatment_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,c1,l1,m,y\n0,1,1,1,1\n2,1,1,1,1\n").unwrap();
    let o = run(&["estimate", "--data", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(10));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("ValidationError"), "{err}");
    assert!(err.contains("binary-treatment"), "{err}");
}

#[test]
fn malformed_header_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,m,q\n0,1,1\n").unwrap();
    let o = run(&["estimate", "--data", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(19));
    assert!(String::from_utf8(o.stderr).unwrap().contains("MalformedHeader"));

    let o = run(&["estimate", "--data", path.to_str().unwrap(), "--bins", "m=1", "--estimator", "discrete"]);
    assert_eq!(o.status.code(), Some(18));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}
