//! The command-line binary and the verification harness.

use std::process::Command;

use gl3tame::cli::{mutation_sites, verify_all, RunConfig};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gl3tame")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn adm_list_is_json() {
    let (code, out, _) = run(&["adm", "list"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 25);
    for key in ["word", "length", "perm", "exps", "orbit"] {
        assert!(entries[0].get(key).is_some(), "{key}");
    }
}

#[test]
fn only_weyl_runs_a_subset() {
    let (code, out, _) = run(&["verify-all", "--only", "weyl", "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    assert!(checks.iter().all(|c| c["group"] == "weyl" && c["passed"] == true));
}

#[test]
fn shape_of_reports_missing_shape() {
    let (code, out, _) = run(&["weights", "shape-of", "--family", "split", "--type-abc", "70,40,14"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["shape"], "αβαγ");
    let (code, _, err) = run(&["weights", "shape-of", "--family", "split", "--type-abc", "60,30,20"]);
    assert_eq!(code, 2);
    assert!(err.contains("no admissible shape"), "{err}");
}

#[test]
fn rejects_bad_configuration() {
    let (code, _, err) = run(&["adm", "list", "--p", "9"]);
    assert_eq!(code, 2);
    assert!(err.contains("prime"), "{err}");
    let (code, _, _) = run(&["verify-all", "--precision", "1"]);
    assert_eq!(code, 2);
}

#[test]
fn one_injected_sign_fails_only_its_row() {
    let cfg = RunConfig::default();
    let only = vec!["monodromy/".to_string(), "presentation/".to_string()];
    let base = verify_all(&cfg, &only);
    for pick in [0, 60] {
        let (m, targets) = mutation_sites(&cfg)[pick].clone();
        let mut mutated = cfg.clone();
        mutated.mutation = Some(m);
        let b = verify_all(&mutated, &only);
        let mut extra: Vec<&str> = b.failures().into_iter().filter(|n| !base.failures().contains(n)).collect();
        extra.sort();
        assert_eq!(extra, targets);
        assert_eq!(b.failed, base.failed + 2);
    }
}
