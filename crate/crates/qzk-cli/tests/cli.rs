use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qzk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qzk")).args(args).output().expect("qzk runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn export(dir: &Path, fixture: &str, eps: &str) -> PathBuf {
    let path = dir.join(format!("{fixture}.json"));
    let out = qzk(&["export", fixture, "--eps", eps, path_str(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn exported_fixture_runs_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "unveil", "0.1");
    let text = std::fs::read_to_string(&file).unwrap();
    let parsed = qzk::protocol::ProtocolFile::parse(&text).unwrap();
    assert_eq!(parsed.to_canonical().unwrap(), text);
    let out = qzk(&["run", path_str(&file)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("run.stated-acceptance"));
}

#[test]
fn public_coin_pipeline_verifies_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "unveil", "0.0");
    let pc = dir.path().join("pc.json");
    let out = qzk(&["transform", "--kind", "public-coin", path_str(&file), path_str(&pc)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&qzk(&["verify-zk", "--mode", "perfect", path_str(&pc)])), 0);
    assert_eq!(code(&qzk(&["run", path_str(&pc)])), 0);
    let rewind = qzk(&["rewind", "--trials", "2", path_str(&file)]);
    assert_eq!(code(&rewind), 0);
}

#[test]
fn repetition_kinds_map_to_transforms() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "unveil", "0.1");
    let par = dir.path().join("par.json");
    assert_eq!(code(&qzk(&["transform", "--kind", "par-rep", "--k", "2", path_str(&file), path_str(&par)])), 0);
    let meta = &serde_json::from_str::<Value>(&std::fs::read_to_string(&par).unwrap()).unwrap()["meta"];
    assert!((meta["p_acc"].as_f64().unwrap() - 0.81).abs() < 1e-9);
    let seq = dir.path().join("seq.json");
    assert_eq!(code(&qzk(&["transform", "--kind", "seq-rep", "--k", "3", "--t", "2", path_str(&file), path_str(&seq)])), 0);
}

#[test]
fn attack_on_chain_no_instance_stays_at_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "m4-chain-no", "0.0");
    let report = dir.path().join("attack.json");
    let out = qzk(&["attack", "--restarts", "2", "--iters", "100", "--out", path_str(&report), path_str(&file)]);
    assert_eq!(code(&out), 0);
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let check = &json["checks"][0];
    assert_eq!(check["id"], "attack.soundness");
    assert!(check["measured"].as_f64().unwrap() <= 0.5 + 1e-6);
}

#[test]
fn rewinding_reads_a_verifier_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "unveil", "0.0");
    let dv = dir.path().join("dv.json");
    std::fs::write(&dv, r#"{"work": 1, "aux": 1, "circuit": [{"gate": "H", "wires": [1]}, {"gate": "CNOT", "wires": [1, 0]}, {"gate": "CNOT", "wires": [2, 3]}]}"#).unwrap();
    let out = qzk(&["rewind", "--dv", "file", "--dv-file", path_str(&dv), path_str(&file)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("measured 0.500000000 vs claimed 0.5"));
}

#[test]
fn exit_codes_classify_failures() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "unveil", "0.0");
    let text = std::fs::read_to_string(&file).unwrap();

    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{ not json").unwrap();
    assert_eq!(code(&qzk(&["run", path_str(&bad_json)])), 2);

    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["surprise"] = Value::Bool(true);
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, v.to_string()).unwrap();
    assert_eq!(code(&qzk(&["run", path_str(&unknown)])), 2);

    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["verifier"][0] = serde_json::json!([{"gate": "H", "wires": [0]}, {"matrix": [[[1.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]], "wires": [0]}]);
    let non_unitary = dir.path().join("nonunitary.json");
    std::fs::write(&non_unitary, v.to_string()).unwrap();
    let out = qzk(&["run", path_str(&non_unitary)]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("verifier circuit 1") && err.contains("gate 1"), "{err}");

    assert_eq!(code(&qzk(&["--state-cap", "3", "run", path_str(&file)])), 4);
    assert_eq!(code(&qzk(&["run", path_str(&dir.path().join("missing.json"))])), 2);

    let m4 = export(dir.path(), "m4-chain", "0.0");
    let out = qzk(&["attack", "--restarts", "1", "--iters", "20", path_str(&m4)]);
    assert_eq!(code(&out), 1, "a yes-instance is won beyond 1 − δ");
}

#[test]
fn rewind_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "unveil", "0.0");
    let strip = |o: Output| String::from_utf8_lossy(&o.stdout).lines().map(|l| l.rsplit_once(", ").map_or(l, |(a, _)| a).to_string()).collect::<Vec<_>>();
    let a = strip(qzk(&["--seed", "7", "rewind", "--trials", "2", path_str(&file)]));
    let b = strip(qzk(&["--seed", "7", "rewind", "--trials", "2", path_str(&file)]));
    assert_eq!(a, b);
}
