use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn snnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snnet")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn build_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let out = snnet(&[&["build"], args].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    write(dir, name, std::str::from_utf8(&out.stdout).unwrap())
}

#[test]
fn identity_build_has_calibrated_bias() {
    let out = snnet(&["build", "identity", "--delta", "0.1", "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let y = v["neurons"].as_array().unwrap().iter().find(|n| n["name"] == "y").unwrap();
    assert!((y["bias"].as_f64().unwrap() - 2.19722).abs() < 1e-5);
}

#[test]
fn build_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = build_to(dir.path(), "xor.json", &["xor", "--delta", "0.05"]);
    let loaded = snnet::json::network_from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let direct = snnet::builders::xor_circuit(snnet::builders::GateParams::new(1.0, 0.05).unwrap()).unwrap();
    assert_eq!(loaded, direct);
}

#[test]
fn shared_outputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let a = build_to(dir.path(), "a.json", &["and", "--delta", "0.1"]);
    let b = build_to(dir.path(), "b.json", &["or", "--delta", "0.1"]);
    let out = snnet(&["compose", &a, &b]);
    assert_eq!(out.status.code(), Some(2));
    let v = json_of(&out);
    assert_eq!(v["error"]["kind"], "incompatible");
    assert_eq!(v["error"]["details"][0]["kind"], "shared-output");
}

#[test]
fn compose_and_hide_produce_networks() {
    let dir = tempfile::tempdir().unwrap();
    let and = build_to(dir.path(), "and.json", &["and", "--delta", "0.1"]);
    let not = write(
        dir.path(),
        "not.json",
        &serde_json::to_string(&snnet::json::network_to_json(
            &snnet::builders::not_gate_named("y", "a", "ny", snnet::builders::GateParams::new(1.0, 0.1).unwrap())
                .unwrap(),
        ))
        .unwrap(),
    );
    let out = snnet(&["compose", &and, &not]);
    assert!(out.status.success());
    let composite = write(dir.path(), "c.json", std::str::from_utf8(&out.stdout).unwrap());
    let out = snnet(&["hide", &composite, "y"]);
    assert!(out.status.success());
    let net = snnet::json::network_from_str(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(net.outputs().len(), 1);
    assert_eq!(net.internals().len(), 2);
}

#[test]
fn verify_compose_out_succeeds() {
    let out = snnet(&["verify", "compose-out", "--random", "200", "--max-neurons", "3", "--horizon", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["instances"], 200);
}

#[test]
fn verify_on_given_networks() {
    let dir = tempfile::tempdir().unwrap();
    let nand = build_to(dir.path(), "nand.json", &["nand", "--delta", "0.05"]);
    let out = snnet(&["verify", "hiding", "--net1", &nand, "--hide", "and", "--horizon", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let out = snnet(&["verify", "beh2-equivalence", "--net1", &nand, "--horizon", "3"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn prob_reports_gate_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let id = build_to(dir.path(), "id.json", &["identity", "--delta", "0.1"]);
    let input = write(dir.path(), "in.json", r#"{"inputs":["x"],"prefix":[[1]],"extension":"hold"}"#);
    let trace = write(dir.path(), "t.json", r#"{"neurons":["x","y"],"configs":[[1,0],[1,1]]}"#);
    let out = snnet(&["prob", &id, "--input", &input, "--trace", &trace]);
    assert!(out.status.success());
    assert!((json_of(&out)["probability"].as_f64().unwrap() - 0.9).abs() < 1e-12);
    let out = snnet(&["prob", &id, "--input", &input, "--trace", &trace, "--conditional"]);
    assert!((json_of(&out)["probability"].as_f64().unwrap() - 0.9).abs() < 1e-12);
}

#[test]
fn simulate_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let id = build_to(dir.path(), "id.json", &["identity", "--delta", "0.1"]);
    let input = write(dir.path(), "in.json", r#"{"inputs":["x"],"prefix":[[1]],"extension":"hold"}"#);
    let event = write(dir.path(), "e.json", r#"{"require":[{"t":1,"neuron":"y","fires":1}]}"#);
    let args = ["simulate", &id, "--input", &input, "--horizon", "1", "--trials", "20000", "--seed", "4", "--confidence", "0.9999366", "--event", &event];
    let a = snnet(&args);
    let b = snnet(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    assert!(v["ci_low"].as_f64().unwrap() <= 0.9 && 0.9 <= v["ci_high"].as_f64().unwrap(), "{v}");
}

#[test]
fn check_reports_verdicts_and_interface_errors() {
    let dir = tempfile::tempdir().unwrap();
    let filter = build_to(dir.path(), "f.json", &["filter", "--n", "2", "--delta", "0.05"]);
    let out = snnet(&["check", &filter, "filter", "--n", "2", "--delta", "0.0975"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["solved"], true);

    let and = build_to(dir.path(), "and.json", &["and", "--k", "3", "--delta", "0.1"]);
    let out = snnet(&["check", &and, "wta", "--n", "3", "--delta", "0.1", "--t-c", "5", "--t-s", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"]["kind"], "interface-mismatch");
}

#[test]
fn bad_usage_and_bad_json_exit_nonzero() {
    let out = snnet(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["error"]["kind"], "usage");

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"neurons\": [");
    let out = snnet(&["hide", &bad, "y"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"]["kind"], "malformed-input");
}
