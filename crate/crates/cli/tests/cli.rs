use std::path::Path;
use std::process::{Command, Output};

use rom0d::solver::{idx, read_solution_csv, P_IN, P_OUT};

const SINGLE_VESSEL: &str = r#"{
  "vessels": [{"id": 0, "length": 1.0, "area": 1.0}],
  "boundary_conditions": [
    {"vessel_id": 0, "kind": "FLOW", "value": 10.0},
    {"vessel_id": 0, "kind": "RESISTANCE", "value": {"R": 100.0}}
  ]
}"#;

fn rom0d(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rom0d")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn single_vessel_solve_matches_hand_solution() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("net.json"), SINGLE_VESSEL).unwrap();
    let o = rom0d(tmp.path(), &["solve", "--network", "net.json", "--mode", "steady", "--out", "sol"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sol = read_solution_csv::<f64>(tmp.path().join("sol/solution.csv")).unwrap();
    let x = &sol.states[0];
    assert!((x[idx(0, P_IN)] - 1010.053_096_491_487).abs() < 1e-9);
    assert!((x[idx(0, P_OUT)] - 1000.0).abs() < 1e-9);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("sol/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_input_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rom0d(tmp.path(), &["solve", "--network", "nowhere.json", "--out", "sol"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere.json"), "{}", stderr(&o));
}

#[test]
fn junction_engine_without_coefficients_names_the_junction() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(rom0d(d, &["make-tree", "--depth", "2", "--out", "tree"]).status.success());
    let o = rom0d(d, &["solve", "--network", "tree/network.json", "--engine", "rri", "--mode", "steady", "--out", "sol"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("junction 0"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rom0d(tmp.path(), &["make-tree", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for out in ["a", "b"] {
        assert!(rom0d(d, &["make-tree", "--depth", "3", "--out", &format!("{out}/tree")]).status.success());
        let net = format!("{out}/tree/network.json");
        let o = rom0d(d, &["solve", "--network", &net, "--mode", "transient", "--steps", "50", "--out", &format!("{out}/sol")]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["tree/network.json", "sol/solution.csv", "sol/diagnostics.json"] {
        let a = std::fs::read(d.join("a").join(f)).unwrap();
        let b = std::fs::read(d.join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn config_file_values_yield_to_explicit_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("c.json"), r#"{"depth": 4, "out": "from_config"}"#).unwrap();
    let o = rom0d(d, &["make-tree", "--config", "c.json", "--depth", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let net: rom0d::Network = rom0d::network::load_network(d.join("from_config/network.json")).unwrap();
    assert_eq!(net.vessels().len(), 7);
}

#[test]
fn every_subcommand_has_help() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in [
        "make-tree",
        "estimate-splits",
        "generate-data",
        "train",
        "predict",
        "solve",
        "fit-coeffs",
        "fit-tree",
        "impedance",
        "compare",
    ] {
        let o = rom0d(tmp.path(), &[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}");
        assert!(String::from_utf8_lossy(&o.stdout).contains("--out"), "{cmd}");
    }
}
