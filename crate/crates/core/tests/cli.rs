use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn leafquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leafquant")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut Value)) -> String {
    let out = leafquant(&["preset", "flat_loop", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let path = dir.join("flat_loop.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    v["grid"]["N"] = json!(32);
    v["integrator"]["steps"] = json!(64);
    edit(&mut v);
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn version_and_help() {
    let v = leafquant(&["--version"]);
    assert_eq!(code(&v), 0);
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
    let h = leafquant(&["--help"]);
    assert_eq!(code(&h), 0);
    let text = String::from_utf8_lossy(&h.stdout);
    for sub in ["run", "verify", "preset"] {
        assert!(text.contains(sub));
    }
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |_| {});
    let out = dir.path().join("out");
    let o = leafquant(&["run", &cfg, "--out", out.to_str().unwrap(), "--steps", "32", "--dump-unitary"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS flat_holonomy"));
    for f in ["report.json", "timeseries.csv", "unitary.fqu", "geometric.fqu"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn validation_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| {
        v["grid"].as_object_mut().unwrap().remove("N");
    });
    let o = leafquant(&["run", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/grid/N"));
    assert_eq!(code(&leafquant(&["verify", "nonsense"])), 1);
    assert_eq!(code(&leafquant(&["preset", "nonsense", "--out", dir.path().to_str().unwrap()])), 1);
}

#[test]
fn overflow_during_evolution_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| {
        v["hamiltonian"] = json!([{ "index": [], "coeff": "exp(exp(exp(t)))" }]);
    });
    let o = leafquant(&["run", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failed_check_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| {
        v["tolerances"] = json!({ "unitarity": 1e-30 });
    });
    let o = leafquant(&["run", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL unitarity"));
}

#[test]
fn verify_suite_exits_zero() {
    let o = leafquant(&["verify", "dirac"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS dirac_symbol"));
}
