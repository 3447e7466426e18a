use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_duality"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("duality-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, file: &str, text: &str) -> PathBuf {
    let p = dir.join(file);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CYCLIC: &str = r#"{"n": 3, "entries": [[-1, 1, 0], [0, -1, 1], [1, 0, -1]]}"#;

#[test]
fn inspect_cyclic() {
    let dir = scratch("inspect");
    let f = write(&dir, "cyc.json", CYCLIC);
    let o = run(&["inspect", f.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("Generator, irreducible, non-reversible, eigenvalues 0, -1.5±0.866025i"), "{s}");
}

#[test]
fn inspect_zero_and_bad_input() {
    let dir = scratch("inspect-bad");
    let zero = write(&dir, "zero.json", r#"{"n": 2, "entries": [[0, 0], [0, 0]]}"#);
    let o = run(&["inspect", zero.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("Generator, reducible"));
    let bad = write(&dir, "bad.json", r#"{"n": 2, "entries": [[0, 0, 0], [0, 0, 0]]}"#);
    assert_eq!(run(&["inspect", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["inspect", dir.join("missing.json").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn duality_basis_json() {
    let dir = scratch("basis");
    let f = write(&dir, "cyc.json", CYCLIC);
    let o = run(&["duality-basis", f.to_str().unwrap(), f.to_str().unwrap(), "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dimension"], 3);
    assert_eq!(v["max_rank"], 3);
    let one = write(&dir, "one.json", r#"{"n": 1, "entries": [[0]]}"#);
    let o = run(&["duality-basis", one.to_str().unwrap(), one.to_str().unwrap()]);
    assert!(stdout(&o).starts_with("dimension 1"));
}

#[test]
fn siegmund_reports_classification() {
    let dir = scratch("siegmund");
    let f = write(&dir, "cyc.json", CYCLIC);
    let o = run(&["siegmund", f.to_str().unwrap(), "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["monotone"], false);
    assert_eq!(v["class"], "Invalid");
    let blocked = write(&dir, "blocked.json", r#"{"n": 3, "entries": [[-1, 1, 0], [1, -2, 1], [0, 1, -1]]}"#);
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["siegmund", blocked.to_str().unwrap(), "--json"]))).unwrap();
    assert_eq!(v["monotone"], true);
    assert_eq!(v["L"]["entries"][2], serde_json::json!([0.0, 1.0, -2.0]));
}

#[test]
fn scenarios_pass_and_emit_artifacts() {
    let dir = scratch("scenario");
    let o = run(&["scenario", "rw6-siegmund", "--n", "12", "--json", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["scenario"], "rw6-siegmund");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert!(dir.join("rw6_siegmund_dual.json").exists());
    assert!(run(&["scenario", "cyclic3"]).status.success());
    assert!(run(&["scenario", "sep-families", "--gamma", "3"]).status.success());
    assert!(run(&["scenario", "all"]).status.success());
    assert_eq!(run(&["scenario", "nope"]).status.code(), Some(2));
}

#[test]
fn models_and_tables() {
    let o = run(&["model", "rw54", "--n", "4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["L"]["n"], 4);
    assert_eq!(v["spectrum_L"]["blocks"].as_array().unwrap().len(), 4);
    let dir = scratch("model");
    let vf = write(&dir, "v.json", r#"{"vertices": ["a", "b"]}"#);
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["model", "sep", "--V", vf.to_str().unwrap(), "--gamma", "2"]))).unwrap();
    assert_eq!(v["sep"]["n"], 9);
    assert_eq!(v["ladder"]["n"], 16);
    let o = run(&[
        "duality",
        "sep",
        "--alpha",
        "0",
        "--beta",
        "1",
        "--eps",
        "0",
        "--delta",
        "1",
        "--gamma",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("regime classical"));
    let csv = fs::read_to_string(dir.join("single_site.csv")).unwrap();
    assert_eq!(csv.lines().nth(2).unwrap(), "1,0,0.5,1");
    let o = run(&["duality", "sep", "--alpha", "0", "--beta", "1", "--eps", "-1", "--delta", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["model", "rw54", "--n", "x"]).status.code(), Some(2));
}
