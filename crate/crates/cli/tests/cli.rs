use std::path::Path;
use std::process::{Command, Output};

fn pkmdp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pkmdp"))
        .args(args)
        .env("PKMDP_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn record(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("record.json")).unwrap()).unwrap()
}

#[test]
fn solve_writes_record_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("one.json");
    std::fs::write(&model, r#"{"transitions": [[[1]]], "rewards": [[1]]}"#).unwrap();
    let out = dir.path().join("out");
    let o = pkmdp(&["solve", "--model", model.to_str().unwrap(), "--alpha", "0.5"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = record(&out);
    assert_eq!(r["payload"]["values"][0].as_f64().unwrap(), 2.0);
    assert!(out.join("timing.json").exists());
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pkmdp(&["learn-q", "--gen-states", "3", "--alpha", "0.9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn bad_flag_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pkmdp(&["learn-q", "--schedule", "poly:0.2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_check_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = pkmdp(
        &["learn-q", "--gen-states", "3", "--alpha", "0.9", "--seed", "1", "--steps", "10", "--eps", "1e-6"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn same_seed_same_record_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["learn-q", "--gen-states", "3", "--alpha", "0.9", "--seed", "4", "--steps", "3000", "--trajectory"];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(pkmdp(&args, &a).status.success());
    assert!(pkmdp(&args, &b).status.success());
    let ra = std::fs::read(a.join("record.json")).unwrap();
    let rb = std::fs::read(b.join("record.json")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(
        std::fs::read_to_string(a.join("trajectory.jsonl")).unwrap().lines().count(),
        3000
    );
    let o = pkmdp(
        &["plot-data", "--record", a.join("record.json").to_str().unwrap(), "--series", "q-distance"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("x,y\n"));
    let o = pkmdp(&["plot-data", "--record", a.join("record.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q-distance"));
}

#[test]
fn gen_model_output_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = pkmdp(&["gen-model", "--gen-states", "5", "--gen-seed", "3"], dir.path());
    assert!(o.status.success());
    let model = dir.path().join("model.json");
    let out = dir.path().join("verify");
    let o = pkmdp(
        &["verify-rational", "--model", model.to_str().unwrap(), "--alpha", "0.5", "--policy", "0,0,0,0,0"],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(record(&out)["payload"]["all_equal"], true);
}

#[test]
fn schema_subcommand_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = pkmdp(&["schema", "record"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.get("properties").is_some() || v.get("$defs").is_some());
}
