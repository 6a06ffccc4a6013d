// SPDX-License-Identifier: Apache-2.0
//! End-to-end runs of the k2lab binary.

use std::process::{Command, Output};

use serde_json::Value;

fn k2lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_k2lab")).args(args).output().expect("spawn k2lab")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("k2lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn k2_eval_closed_form() {
    let out = k2lab(&["k2", "eval", "--a", "1", "--b", "1", "--q", "25", "--engine", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    let value = &v["rows"][0]["value"];
    assert_eq!(value["exact"]["terms"], serde_json::json!([[17, 5]]));
    let check = &v["checks"][0];
    assert_eq!(check["pass"], true);
    assert_eq!(check["lhs"], check["rhs"]);
}

#[test]
fn corr_prime_degenerate() {
    let out = k2lab(&["corr", "prime", "--p", "5", "--a", "1", "--h", "0", "--hc", "0", "--psi", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let row = &v["rows"][0];
    assert_eq!(row["class"], "Degenerate");
    assert_eq!(row["value"]["exact"]["integer"], 20);
}

#[test]
fn plan_exponents_gamma_max() {
    for path in [&["plan", "exponents"][..], &["vdc", "plan"][..]] {
        let mut args = path.to_vec();
        args.extend(["--L", "5"]);
        let out = k2lab(&args);
        assert_eq!(out.status.code(), Some(0), "{path:?}");
        assert_eq!(json(&out)["params"]["gamma_max"], "1/1044");
    }
}

#[test]
fn exit_codes() {
    let out = k2lab(&["suite", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
    let out = k2lab(&["k2", "eval", "--a", "1", "--b", "1", "--q", "20011", "--engine", "exact"]);
    assert_eq!(out.status.code(), Some(3));
    let out = k2lab(&["k2", "frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = k2lab(&["k2", "eval", "--a", "5", "--b", "1", "--q", "25"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_deterministic_across_runs_and_threads() {
    let base = ["suite", "crt", "--quick", "--seed", "7"];
    let a = k2lab(&base);
    let b = k2lab(&base);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    for t in ["1", "3"] {
        let mut args = vec!["--threads", t];
        args.extend(base);
        assert_eq!(k2lab(&args).stdout, a.stdout, "threads={t}");
    }
    let other = k2lab(&["suite", "crt", "--quick", "--seed", "8"]);
    assert_ne!(other.stdout, a.stdout);
}

#[test]
fn csv_quotes_embedded_commas() {
    let out = k2lab(&["--format", "csv", "corr", "prime", "--p", "7", "--a", "1", "--h", "0,1", "--hc", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("class,p,ratio,value.abs"));
    let row = lines.next().unwrap();
    assert!(row.contains("\"[[0,-28],[1,14],[2,14],[4,14]]\""), "{row}");
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rec = rdr.records().next().unwrap().unwrap();
    assert_eq!(rec.len(), header.split(',').count());
}

#[test]
fn out_file_matches_stdout() {
    let path = tmp("eval.json");
    let args = ["k2", "eval", "--a", "2", "--b", "3", "--q", "49"];
    let plain = k2lab(&args);
    let mut with_out = vec!["--out", path.to_str().unwrap()];
    with_out.extend(args);
    let out = k2lab(&with_out);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), plain.stdout);
}

#[test]
fn config_file_with_flag_override() {
    let path = tmp("cfg.json");
    std::fs::write(&path, r#"{"seed": 7, "quick": true}"#).unwrap();
    let from_cfg = k2lab(&["--config", path.to_str().unwrap(), "suite", "crt"]);
    let direct = k2lab(&["suite", "crt", "--quick", "--seed", "7"]);
    assert_eq!(from_cfg.status.code(), Some(0));
    assert_eq!(from_cfg.stdout, direct.stdout);
    let overridden = k2lab(&["--config", path.to_str().unwrap(), "suite", "crt", "--seed", "8"]);
    assert_eq!(json(&overridden)["params"]["seed"], 8);
}

#[test]
fn suites_pass() {
    for name in ["combo", "explicit", "vdc", "parseval"] {
        let out = k2lab(&["suite", name, "--quick"]);
        let v = json(&out);
        assert_eq!(out.status.code(), Some(0), "suite {name}: {:?}", v["checks"]);
        assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    }
}

#[test]
fn sqfree_commands() {
    let out = k2lab(&["sqfree", "delta", "--x", "20", "--q", "3", "--a", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let out = k2lab(&["sqfree", "max", "--x", "100000", "--q", "2310"]);
    assert_eq!(out.status.code(), Some(0));
}
