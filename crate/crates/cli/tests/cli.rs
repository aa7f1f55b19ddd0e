use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lfmra::analysis::{construct, StepFn};
use lfmra::mra::{CoeffTable, LambdaExps, MaskTable, SpectrumTable};
use lfmra::trees::RootedTree;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn lfmra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfmra")).args(args).output().unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&out.stderr)));
    v["error"].as_str().unwrap().to_string()
}

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> T {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn build_is_deterministic_and_reloads() {
    let tree = data("worked_tree.json");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = lfmra(&["build", "--tree", tree.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for name in &names {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }

    let t = RootedTree::from_json(&serde_json::from_str(&fs::read_to_string(&tree).unwrap()).unwrap()).unwrap();
    let c = construct(&t, &LambdaExps::new()).unwrap();
    let dir = a.path();
    assert_eq!(MaskTable::from_json(&read_json(dir, "mask.json"), None).unwrap(), c.mask);
    assert_eq!(SpectrumTable::from_json(&read_json(dir, "spectrum.json"), None).unwrap(), c.spectrum);
    assert_eq!(StepFn::from_json(&read_json(dir, "phi.json")).unwrap(), c.phi);
    let coeffs = CoeffTable::from_json(&read_json(dir, "coeffs.json")).unwrap();
    assert_eq!(coeffs.field().order(), 4);
    assert_eq!(fs::read_to_string(dir.join("grid.txt")).unwrap(), fs::read_to_string(data("worked_grid.txt")).unwrap());
}

#[test]
fn sweep_small_field() {
    let out = lfmra(&["sweep", "--p", "2", "--s", "2"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("16 trees, 16 certified"));
}

#[test]
fn sampled_sweep_is_reproducible() {
    let run = || lfmra(&["sweep", "--p", "3", "--s", "1", "--sample", "5", "--seed", "11"]).stdout;
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
    let out = lfmra(&["sweep", "--p", "3", "--s", "1", "--sample", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn random_tree_is_seeded() {
    let run = |seed: &str| lfmra(&["tree", "random", "--p", "2", "--s", "3", "--seed", seed]).stdout;
    assert_eq!(run("3"), run("3"));
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "t.json", &String::from_utf8(run("3")).unwrap());
    let out = lfmra(&["tree", "validate", &path]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], Value::Bool(true));
    assert_eq!(v["M"].as_u64().unwrap() + 2, v["height"].as_u64().unwrap());
}

#[test]
fn enumerate_and_cap() {
    let out = lfmra(&["tree", "enumerate", "--p", "2", "--s", "2"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 16);

    let out = Command::new(env!("CARGO_BIN_EXE_lfmra"))
        .args(["tree", "enumerate", "--p", "2", "--s", "2"])
        .env("LOCALFIELD_MRA_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "CapExceeded");
    assert!(out.stdout.is_empty());

    let out = Command::new(env!("CARGO_BIN_EXE_lfmra"))
        .args(["tree", "enumerate", "--p", "2", "--s", "2"])
        .env("LOCALFIELD_MRA_CAP", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let field = r#""field":{"p":2,"s":2,"modulus":[1,1,1]}"#;
    let cyclic = write(dir.path(), "cyclic.json", &format!(r#"{{{field},"parent":{{"1,0":"0,1","0,1":"1,0","1,1":"0,0"}}}}"#));
    let out = lfmra(&["tree", "validate", &cyclic]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "Cycle");

    let out = lfmra(&["field", "find-irreducible", "--p", "4", "--s", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "NotPrime");

    let bad = write(dir.path(), "bad.json", "{ not json");
    let out = lfmra(&["verify", "--tree", &bad, "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_exact_and_float() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let tree = data("worked_tree.json");
    let out = lfmra(&["verify", "--tree", tree.to_str().unwrap(), "-o", o]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("certified_mra: true"));
    let report: Value = read_json(dir.path(), "report.json");
    assert_eq!(report["certified_mra"], Value::Bool(true));

    let turns = write(dir.path(), "turns.json", r#"{"entries":[{"i":"1,1","j":"0,0","turns":0.1234567}]}"#);
    let out = lfmra(&["verify", "--tree", tree.to_str().unwrap(), "--float-lambdas", &turns, "-o", o]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = read_json(dir.path(), "report.json");
    assert_eq!(report["certified_mra"], Value::Bool(false));
    assert!(report["criteria"].as_array().unwrap().iter().all(|c| c["pass"] == Value::Bool(true)));

    let off_edge = write(dir.path(), "off.json", r#"{"entries":[{"i":"1,0","j":"0,0","turns":0.5}]}"#);
    let out = lfmra(&["verify", "--tree", tree.to_str().unwrap(), "--float-lambdas", &off_edge, "-o", o]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "NotAnEdge");
}
