use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enrtrees")).args(args).env_remove("ENRTREES_SEED").output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn rational_polya_series() {
    let v = json(&["series", "polya", "--degree", "9", "--rational"]);
    assert_eq!(v["schema"], "enrtrees.series/1");
    let c: Vec<&str> = v["coefficients"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(c, ["0", "1", "1", "2", "4", "9", "20", "48", "115", "286"]);
}

#[test]
fn two_tree_chain_occupancy() {
    let v = json(&["ktree-chain", "-k", "2", "--steps", "100000"]);
    assert_eq!(v["schema"], "enrtrees.ktree_chain/1");
    assert!((v["b_k"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let occ: Vec<f64> = v["occupancy"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((occ[0] - 2.0 / 3.0).abs() < 0.01 && (occ[1] - 1.0 / 3.0).abs() < 0.01);
}

#[test]
fn single_vertex_sample() {
    let v = json(&["sample", "polya", "-n", "1"]);
    assert_eq!(v["schema"], "enrtrees.sample/1");
    assert_eq!(v["tree"]["c"], serde_json::json!([]));
    assert_eq!(v["stats"]["height"], 0);
}

#[test]
fn out_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    for (name, threads) in [("a.jsonl", "1"), ("b.jsonl", "1"), ("c.jsonl", "3")] {
        let o = run(&["--threads", threads, "sample", "cacti3", "-n", "40", "--count", "25", "--decode", "graph", "--out", &path(name)]);
        assert!(o.status.success());
    }
    let a = std::fs::read(path("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(path("b.jsonl")).unwrap());
    assert_eq!(a, std::fs::read(path("c.jsonl")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 25);
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema"], "enrtrees.sample/1");
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_enrtrees"))
        .args(["sample", "polya", "-n", "30"])
        .env("ENRTREES_SEED", "77")
        .output()
        .unwrap();
    let flag = run(&["--seed", "77", "sample", "polya", "-n", "30"]);
    let default = run(&["sample", "polya", "-n", "30"]);
    assert_eq!(with_env.stdout, flag.stdout);
    assert_ne!(with_env.stdout, default.stdout);
}

#[test]
fn errors_have_distinct_exit_codes() {
    for (args, code) in [
        (&["rho", "nosuch"][..], 3),
        (&["sample", "binary", "-n", "4"][..], 4),
        (&["verify", "nosuch"][..], 2),
        (&["--bogus"][..], 2),
        (&["--spec", "/nonexistent/species.json", "rho", "custom"][..], 3),
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(code), "{args:?}");
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["sample", "binary", "-n", "4"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mod 2"));
}

#[test]
fn species_file_replaces_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("binary.json");
    std::fs::write(&p, r#"{"kind": "SET_WEIGHTED", "weights": {"0": 1, "2": 1}}"#).unwrap();
    let custom = json(&["--spec", p.to_str().unwrap(), "series", "mine", "--degree", "12", "--rational"]);
    let builtin = json(&["series", "binary", "--degree", "12", "--rational"]);
    assert_eq!(custom["coefficients"], builtin["coefficients"]);
    assert_eq!(custom["model"], "mine");
}

#[test]
fn diameter_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    let v = json(&["diameter", "cacti3", "--sizes", "16,32", "--samples", "5", "--out", p.to_str().unwrap()]);
    assert_eq!(v["schema"], "enrtrees.diameter/1");
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=enrtrees.diameter.csv/1"));
    assert_eq!(lines.next(), Some("model,n,seed,D,H,fixpoints,runtime_ms"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert_eq!(r[0], "cacti3");
        let h: f64 = r[4].parse().unwrap();
        let d: f64 = r[3].parse().unwrap();
        assert!(h <= d);
    }
}

#[test]
fn verify_reports_carry_a_schema() {
    let o = run(&["verify", "oracle"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], "enrtrees.verify/1");
    assert!(String::from_utf8_lossy(&o.stderr).contains("criterion  1 oracle"));
}
