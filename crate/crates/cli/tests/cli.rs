use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const G1: &str = r#"{ "version": 1, "time_grid": [0, 1, 2],
  "nodes": [
    {"id": "n0", "period": 0, "a": 1, "b": 1, "c": 0},
    {"id": "n1", "period": 1, "parent": "n0", "a": 1, "b": 1, "c": 0},
    {"id": "n2", "period": 2, "parent": "n1", "a": 1, "b": 1, "c": 0}
  ] }"#;

const WITH_RATE: &str = r#"{ "version": 1, "time_grid": [0, 1],
  "nodes": [
    {"id": "r", "period": 0, "a": 0, "b": 2, "c": 1, "rate": 1},
    {"id": "u", "period": 1, "parent": "r", "prob": 0.5, "a": 1, "b": 1, "c": 1, "rate": 1, "chi": 4},
    {"id": "d", "period": 1, "parent": "r", "prob": 0.5, "a": 1, "b": 1, "c": 1, "rate": 1, "chi": 0}
  ] }"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stopgame"))
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let out = run(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn value_reports_frontier_tag() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.game", G1);
    let v = json(&["value", s(&g), "--eps", "0.01", "--delta", "0.25"]);
    assert_eq!(v["value"], 1.0);
    assert_eq!(v["frontier"][0]["tag"], "A3");
    let text = String::from_utf8(run(&["value", s(&g)]).stdout).unwrap();
    assert!(text.starts_with("value 1\n"));
}

#[test]
fn gap_text_and_json() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.game", G1);
    let text = String::from_utf8(run(&["gap", s(&g)]).stdout).unwrap();
    assert!(text.contains("sup-inf 0, inf-sup 1, no pure value"), "{text}");
    let v = json(&["gap", s(&g), "--budget", "5"]);
    assert_eq!((v["sup_inf"].as_f64(), v["inf_sup"].as_f64()), (Some(0.0), Some(1.0)));
    assert_eq!(run(&["gap", s(&g), "--budget", "2"]).status.code(), Some(1));
}

#[test]
fn evaluate_and_best_response() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.game", G1);
    let smear = write(&dir, "smear0.strat", r#"{"nodes": [{"id": "n0", "action": "smear", "delta": 0.5}]}"#);
    let never = write(&dir, "never.strat", r#"{"nodes": []}"#);
    let v = json(&["evaluate", s(&g), "--p1", s(&smear), "--p2", s(&never)]);
    assert_eq!(v["value"], 1.0);
    let br = json(&["best-response", s(&g), "--opponent", s(&smear), "--side", "2"]);
    assert_eq!(br["value"], 1.0);
    let atom = write(&dir, "atom.strat", r#"{"nodes": [{"id": "n0", "action": "atom"}]}"#);
    let br = json(&["best-response", s(&g), "--opponent", s(&atom), "--side", "2"]);
    assert_eq!(br["value"], 0.0);
    assert_eq!(br["actions"][0]["action"], "atom");
}

#[test]
fn solve_round_trips_strategies() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.game", G1);
    let v = json(&["solve", s(&g), "--delta", "0.5"]);
    let p1 = write(&dir, "p1.strat", &v["player_one"].to_string());
    let p2 = write(&dir, "p2.strat", &v["player_two"].to_string());
    let e = json(&["evaluate", s(&g), "--p1", s(&p1), "--p2", s(&p2)]);
    assert_eq!(e["value"], 1.0);
    assert_eq!(v["value_process"].as_array().unwrap().len(), 3);
}

#[test]
fn transforms_write_games() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "rate.game", WITH_RATE);
    let cum = dir.path().join("cum.game");
    json(&["transform", s(&g), "--reduce-cumulative", "--out", s(&cum)]);
    let fin = dir.path().join("fin.game");
    let r = json(&["transform", s(&cum), "--reduce-final", "--out", s(&fin)]);
    // chi after folding the rate: leaf u gets 1 + 4, leaf d gets 1 + 0.
    assert_eq!(r["constant"], 3.0);
    let reduced: Value = serde_json::from_str(&std::fs::read_to_string(&fin).unwrap()).unwrap();
    assert!(reduced["nodes"].as_array().unwrap().iter().all(|n| n.get("chi").is_none() && n.get("rate").is_none()));
    let tr = dir.path().join("tr.game");
    json(&["transform", s(&g), "--truncate", "0.5", "--out", s(&tr)]);
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&tr).unwrap()).unwrap();
    assert_eq!(t["nodes"][0]["b"], 0.5);
    assert_eq!(run(&["transform", s(&g), "--truncate", "0", "--out", s(&tr)]).status.code(), Some(1));
}

#[test]
fn certify_passes_and_fuzzes() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.game", G1);
    let v = json(&["certify", s(&g), "--eps", "0.1", "--delta", "0.5"]);
    assert_eq!(v["certified"], true);
    let f = json(&["certify", "--fuzz", "20", "--seed", "9", "--eps", "1e-6"]);
    assert_eq!(f["failed"].as_array().unwrap().len(), 0);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.game", "{ nope");
    assert_eq!(run(&["value", s(&bad)]).status.code(), Some(2));
    assert_eq!(run(&["value", s(&dir.path().join("missing.game"))]).status.code(), Some(2));
    let unbalanced = write(&dir, "p.game", &G1.replace(r#""parent": "n0","#, r#""parent": "n0", "prob": 0.5,"#));
    assert_eq!(run(&["value", s(&unbalanced)]).status.code(), Some(1));
    let g = write(&dir, "g1.game", G1);
    assert_eq!(run(&["value", s(&g), "--delta", "1.5"]).status.code(), Some(1));
    let rate = write(&dir, "rate.game", WITH_RATE);
    assert_eq!(run(&["value", s(&rate)]).status.code(), Some(1));
    let strat = write(&dir, "bad.strat", r#"{"nodes": [{"id": "n0", "action": "leap"}]}"#);
    assert_eq!(run(&["evaluate", s(&g), "--p1", s(&strat), "--p2", s(&strat)]).status.code(), Some(2));
}
