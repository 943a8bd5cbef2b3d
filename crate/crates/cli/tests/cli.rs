use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn losr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_losr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn oracle(dir: &TempDir, name: &str, args: &[&str]) -> String {
    let file = path(dir, name);
    let mut all = vec!["oracle"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", &file]);
    let out = losr(&all);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(Path::new(&file).exists());
    file
}

#[test]
fn inflation_classes_of_the_triangle() {
    let out = losr(&["inflations", "--n", "3", "--order", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["classes"].as_array().unwrap().len(), 2);
    assert_eq!(v["raw_wirings"], "8");
}

#[test]
fn oracle_output_is_stable_and_exact() {
    let dir = TempDir::new().unwrap();
    let a = oracle(&dir, "a.json", &["--family", "ghz", "--noise", "0.83"]);
    let b = oracle(&dir, "b.json", &["--family", "ghz", "--noise", "83/100"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["mode"], "quadratic");

    // irrational entries cannot be written as fractions
    let out = losr(&["oracle", "--family", "ghz", "--mode", "rational"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn closed_form_scores() {
    let dir = TempDir::new().unwrap();
    let ghz = oracle(&dir, "ghz.json", &["--family", "ghz"]);
    let v = json_of(&losr(&["eval", "--inequality", "ghz", "--behavior", &ghz]));
    assert_eq!(v["slack"], "-2+2*sqrt2");

    let lhvm = oracle(&dir, "lhvm.json", &["--family", "lhvm"]);
    let v = json_of(&losr(&["eval", "--inequality", "ghz", "--behavior", &lhvm]));
    assert_eq!(v["lhs"], "12");
    assert_eq!(v["rhs"], "10");

    let w = oracle(&dir, "w.json", &["--family", "w", "--m", "2"]);
    let v = json_of(&losr(&["eval", "--inequality", "bkp", "--behavior", &w, "--m", "2"]));
    assert_eq!(v["score"], "2-1*sqrt2");
    let out = losr(&["eval", "--inequality", "bkp", "--behavior", &w]);
    assert_eq!(out.status.code(), Some(1), "--m is required");
}

#[test]
fn shared_bit_demo_exits_infeasible() {
    for n in ["3", "4", "5"] {
        let out = losr(&["demo", "shared-bit", "--n", n]);
        assert_eq!(out.status.code(), Some(2));
        let v = json_of(&out);
        assert_eq!(v["verdict"], "infeasible");
        assert_eq!(v["certificate_verified"], true);
    }
}

#[test]
fn analytic_sweep_brackets_closed_form() {
    let out = losr(&["sweep", "--family", "ghz-inequality", "--tol", "1e-4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let p = 10.0 / (2.0 * 2f64.sqrt() + 8.0);
    assert!(v["lower"].as_f64().unwrap() <= p && p < v["upper"].as_f64().unwrap());
}

#[test]
fn malformed_behavior_is_an_error() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, "{\"parties\": [").unwrap();
    let out = losr(&["eval", "--inequality", "ghz", "--behavior", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn certify_then_verify() {
    let dir = TempDir::new().unwrap();
    let ideal = oracle(&dir, "ideal.json", &["--family", "ghz", "--noise", "1"]);
    let cert = path(&dir, "cert.json");
    let out = losr(&["certify", "--behavior", &ideal, "--order", "2", "--exact", "--cert-out", &cert]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["verdict"], "infeasible");
    assert_eq!(v["verified"], true);

    let out = losr(&["verify", "--cert", &cert, "--behavior", &ideal, "--order", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["valid"], true);

    // the same witness says nothing about a noisy state
    let noisy = oracle(&dir, "noisy.json", &["--family", "ghz", "--noise", "1/2", "--mode", "float"]);
    let out = losr(&["verify", "--cert", &cert, "--behavior", &noisy, "--order", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["valid"], false);

    let out = losr(&["verify", "--cert", &cert, "--behavior", &ideal, "--order", "1"]);
    assert_eq!(out.status.code(), Some(1));
}
