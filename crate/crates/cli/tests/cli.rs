use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("scfred-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn scfred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scfred")).env_remove("SCFRED_OUT").args(args).output().unwrap()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn suite_output_is_byte_identical() {
    let dir = scratch("suite");
    let (a, b) = (dir.join("a"), dir.join("b"));
    for d in [&a, &b] {
        let o = scfred(&["suite", "--seed", "42", "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let first = fs::read(a.join("suite.json")).unwrap();
    assert_eq!(first, fs::read(b.join("suite.json")).unwrap());
    assert_eq!(fs::read(a.join("suite.csv")).unwrap(), fs::read(b.join("suite.csv")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 11);
}

#[test]
fn glue_diag_determinant_bounded_below() {
    let dir = scratch("glue");
    for profile in ["exponential", "logarithmic"] {
        let o = scfred(&["glue", "--profile", profile, "--r", "0.5", "--diag", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = fs::read_to_string(dir.join("glue_diag.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("s,beta,glued,antiglued,determinant"));
        let dets: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
        assert!(!dets.is_empty());
        assert!(dets.iter().all(|&d| d >= 0.5), "{profile}");
        let rep = json(dir.join("glue.json"));
        assert_eq!(rep["passed"], true);
        assert!(rep["roundtrip_error"].as_f64().unwrap() <= 1e-10);
    }
}

#[test]
fn degen_chain_validates() {
    let dir = scratch("degen");
    let d = dir.to_str().unwrap();
    assert!(scfred(&["degen", "chain", "--points", "5", "--out", d]).status.success());
    let o = scfred(&["degen", "validate", dir.join("morse5.json").to_str().unwrap(), "--out", d]);
    assert!(o.status.success());
    let rep = json(dir.join("degen_validate.json"));
    assert_eq!(rep["report"]["passed"], true);

    // a relator whose target is one of its parts
    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"S":["a","b"],"R":[["a","b","a"]]}"#).unwrap();
    let o = scfred(&["degen", "validate", bad.to_str().unwrap(), "--out", d]);
    let rep = json(dir.join("degen_validate.json"));
    assert_eq!(rep["report"]["passed"], false);
    assert_eq!(rep["report"]["target_distinct"]["pass"], false);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_reported() {
    let dir = scratch("badcfg");
    let cfg = dir.join("run.toml");
    fs::write(&cfg, "seed = 1\n[glue]\nr = 0.5\nwidth = 3\n").unwrap();
    let o = scfred(&["glue", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["kind"], "input");
    let msg = err["error"].as_str().unwrap();
    assert!(msg.contains("width") && msg.contains("line 4"), "{msg}");

    fs::write(&cfg, "[tolerances]\nroundtrip = -1.0\n").unwrap();
    let o = scfred(&["glue", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerances.roundtrip"));
}

#[test]
fn env_out_dir_and_config_hash() {
    let dir = scratch("env");
    let cfg = dir.join("run.toml");
    fs::write(&cfg, "seed = 9\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_scfred"))
        .env("SCFRED_OUT", dir.join("env"))
        .args(["sft", "p_g q_g", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "q_g p_g + ℏ");
    let with_cfg = json(dir.join("env/sft.json"));
    assert_eq!(with_cfg["seed"], 9);

    scfred(&["sft", "p_g q_g", "--out", dir.join("plain").to_str().unwrap()]);
    let plain = json(dir.join("plain/sft.json"));
    assert_ne!(with_cfg["config_sha256"], plain["config_sha256"]);
    assert_eq!(with_cfg["normal_form"], plain["normal_form"]);
}

#[test]
fn algebra_datum_matches_simplicial_sphere() {
    let dir = scratch("datum");
    let o = scfred(&["algebra", "datum", "sphere-4", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success());
    let rep = json(dir.join("datum.json"));
    assert_eq!(rep["betti"], serde_json::json!([1, 0, 1]));
    assert_eq!(rep["agrees"], true);
}

#[test]
fn morse_double_well_counts() {
    let dir = scratch("morse");
    let o = scfred(&["morse", "--problem", "double-well", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success());
    let rep = json(dir.join("morse.json"));
    assert_eq!(rep["q_squared_zero"], true);
    assert_eq!(rep["homology"]["betti"], serde_json::json!({"0": 1, "1": 0}));
}
