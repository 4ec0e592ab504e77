use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_rational::BigRational;
use qagree::classical::{pooling_model, zero_one_box, zero_one_signed_model};
use qagree::scenarios::{example1, example2, sweep_scenario, SweepMix};
use qagree_cli::format::{BoxSpec, ClassicalSpec, QuantumSpec, ScenarioFile};
use serde_json::Value;

fn qagree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qagree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = qagree(&all);
    let v = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (v, out.status.code().unwrap())
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn close(v: &Value, want: f64) {
    let got = v.as_f64().unwrap();
    assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
}

#[test]
fn classify_example2_is_ccd() {
    let (v, code) = json(&["classify", "--example", "example2", "--qa", "1/2", "--qb", "1"]);
    assert_eq!(code, 0);
    let r = &v["results"][0];
    assert_eq!(r["kind"], "CCD");
    close(&r["cc_weight"], 2.0 / 3.0);
}

#[test]
fn classify_example1_from_file_agrees() {
    let (v, _) = json(&["classify", &data("example1.json"), "--qa", "0.75", "--qb", "0.75"]);
    let r = &v["results"][0];
    assert_eq!(r["kind"], "Agreement");
    close(&r["cc_weight"], 1.0 / 3.0);
}

#[test]
fn classify_without_pair_covers_every_realized_pair() {
    let (v, _) = json(&["classify", "--example", "example2"]);
    let kinds: Vec<&str> = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds.len(), 4);
    assert_eq!(kinds.iter().filter(|k| **k == "CCD").count(), 1);
}

#[test]
fn malformed_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"format_version\": 1, \"kind\": \"quantum\", \"dims\": [2]").unwrap();
    let out = qagree(&["classify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let out = qagree(&["classify", "--example", "nope"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn recording_removes_the_disagreement() {
    for (qa, qb, want) in [("0.5", "0.5", 2.0 / 3.0), ("0", "0", 1.0 / 3.0), ("0.5", "1", 0.0)] {
        let (v, code) = json(&["record", "--example", "example2", "--qa", qa, "--qb", qb]);
        assert_eq!(code, 0);
        let r = &v["results"][0];
        close(&r["cc_weight"], want);
        assert_ne!(r["kind"], "CCD");
    }
}

#[test]
fn bounds_hold_for_example1() {
    let (v, code) = json(&["bounds", "--example", "example1", "--depolarize", "0.01"]);
    assert_eq!((v["pass"].as_bool(), code), (Some(true), 0));
    let row = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["applicable"] == true)
        .unwrap();
    assert!((row["measured_gap"].as_f64().unwrap() - 0.0012563).abs() < 1e-6);
    assert!((row["bound"].as_f64().unwrap() - 0.1175).abs() < 1e-9);
    let (v, _) = json(&["bounds", "--example", "example1", "--epsilon", "0.01"]);
    assert_eq!(v["pass"], true);
}

#[test]
fn epsilon_bound_is_reported_broken_for_example2() {
    let (v, code) = json(&["bounds", "--example", "example2", "--epsilon", "0.01"]);
    assert_eq!(v["pass"], false);
    assert_eq!(code, 3);
}

#[test]
fn box_checks() {
    let (v, code) = json(&["box", &data("zero-one-box.json")]);
    assert_eq!((v["zero_one_chain"].as_bool(), code), (Some(true), 0));
    let (v, _) = json(&["box", &data("product-box.json")]);
    assert_eq!(v["zero_one_chain"], false);
    let (v, code) = json(&["box", &data("signed-model.json"), "--realizes", &data("zero-one-box.json")]);
    assert_eq!((v["realizes"].as_bool(), code), (Some(true), 0));
    let (_, code) = json(&["box", &data("signed-model.json"), "--realizes", &data("product-box.json")]);
    assert_eq!(code, 3);
}

#[test]
fn small_sweep_passes() {
    let (v, code) = json(&["sweep", "--count", "10", "--seed", "7"]);
    assert_eq!((v["pass"].as_bool(), code), (Some(true), 0));
    for suite in v["suites"].as_array().unwrap() {
        assert_eq!(suite["violations"], 0, "{suite}");
    }
}

#[test]
fn dumped_examples_load_back() {
    let out = qagree(&["examples", "dump", "example2"]);
    let dir = tempfile::tempdir().unwrap();
    let path: PathBuf = dir.path().join("ex2.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let (v, _) = json(&["classify", path.to_str().unwrap(), "--qa", "0.5", "--qb", "1"]);
    assert_eq!(v["results"][0]["kind"], "CCD");
}

#[test]
fn quantum_round_trip() {
    let mut scenarios = vec![example1(1.0), example2()];
    scenarios.extend((0..5).map(|seed| sweep_scenario(SweepMix::ZeroOne, seed).unwrap()));
    for s in scenarios {
        let file = ScenarioFile::new(qagree_cli::format::Body::Quantum(QuantumSpec::from_scenario(&s)));
        let back = ScenarioFile::parse(&file.to_json()).unwrap();
        let qagree_cli::format::Body::Quantum(spec) = back.body else {
            panic!("kind changed")
        };
        let t = spec.build().unwrap();
        assert!(t.rho().max_abs_diff(s.rho()).unwrap() <= 1e-15);
        assert!(t.property().max_abs_diff(s.property()).unwrap() <= 1e-15);
        for (p, q) in t.alice().projectors().iter().zip(s.alice().projectors()) {
            assert!(p.max_abs_diff(q).unwrap() <= 1e-15);
        }
        for (p, q) in t.bob().projectors().iter().zip(s.bob().projectors()) {
            assert!(p.max_abs_diff(q).unwrap() <= 1e-15);
        }
    }
}

#[test]
fn classical_and_box_round_trip() {
    for m in [pooling_model::<BigRational>(), zero_one_signed_model::<BigRational>()] {
        let spec = ClassicalSpec::from_model(&m);
        let text = serde_json::to_string(&spec).unwrap();
        let back: ClassicalSpec = serde_json::from_str(&text).unwrap();
        let rebuilt = back.build_as::<BigRational>().unwrap();
        assert_eq!(rebuilt.measure(), m.measure());
        assert_eq!(ClassicalSpec::from_model(&rebuilt), spec);
    }
    let b = zero_one_box::<BigRational>();
    let spec = BoxSpec::from_box(&b);
    let back: BoxSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(BoxSpec::from_box(&back.build_as::<BigRational>().unwrap()), spec);
}
