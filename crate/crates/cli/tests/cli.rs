use std::path::Path;
use std::process::{Command, Output};

use beampred::Dataset;

const SMALL: &str = "\
[run]
n_samples = 120
seed = 5

[forest]
n_trees = 8

[boosting]
n_trees = 10

[classifier.forest]
n_trees = 8

[sweep]
p_upper = [-30.0]
p_lower = [-70.0]
granularities = [1.0, 5.0]

[cqi]
granularities = [2.0]
";

fn beampred(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beampred"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SMALL).unwrap();
    ok(beampred(dir.path(), &["generate", "--config", "run.toml", "--out", "data.jsonl", "--csv", "data.csv"]));
    dir
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn generate_writes_loadable_dataset_and_csv() {
    let dir = setup();
    let ds = Dataset::load(dir.path().join("data.jsonl")).unwrap();
    assert_eq!(ds.len(), 120);
    assert_eq!(ds.base_seed, 5);
    let csv = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert_eq!(csv.lines().count(), 121);
}

#[test]
fn generate_is_byte_identical_across_worker_counts() {
    let dir = setup();
    ok(beampred(dir.path(), &["generate", "--config", "run.toml", "--out", "again.jsonl", "--workers", "1"]));
    let a = std::fs::read(dir.path().join("data.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("again.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = setup();
    ok(beampred(dir.path(), &["generate", "--config", "run.toml", "--seed", "6", "--out", "s6.jsonl"]));
    let ds = Dataset::load(dir.path().join("s6.jsonl")).unwrap();
    assert_eq!(ds.base_seed, 6);
    assert_ne!(
        std::fs::read(dir.path().join("data.jsonl")).unwrap(),
        std::fs::read(dir.path().join("s6.jsonl")).unwrap()
    );
}

#[test]
fn zero_samples_is_an_error() {
    let dir = setup();
    let out = beampred(dir.path(), &["generate", "--config", "run.toml", "--samples", "0", "--out", "z.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_samples"));
}

#[test]
fn missing_dataset_and_bad_config_fail() {
    let dir = setup();
    assert!(!beampred(dir.path(), &["table2", "--dataset", "nope.jsonl"]).status.success());
    std::fs::write(dir.path().join("bad.toml"), "[run]\nbogus = 1\n").unwrap();
    assert!(!beampred(dir.path(), &["table2", "--config", "bad.toml", "--dataset", "data.jsonl"]).status.success());
}

#[test]
fn table2_has_three_models_and_config_snapshot() {
    let dir = setup();
    let out = ok(beampred(dir.path(), &["table2", "--config", "run.toml", "--dataset", "data.jsonl"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# config={")));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "model,rmse_db");
    let models: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(models, ["ols", "random_forest", "gradient_boosting"]);
    for l in &lines[1..] {
        let v: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }
}

#[test]
fn awareness_sweep_rows() {
    let dir = setup();
    let out = ok(beampred(dir.path(), &["awareness-sweep", "--config", "run.toml", "--dataset", "data.jsonl"]));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "awareness_level,n_features,rmse_db");
    assert_eq!(lines.len(), 6);
    let out = ok(beampred(
        dir.path(),
        &["awareness-sweep", "--config", "run.toml", "--dataset", "data.jsonl", "--per-vehicle"],
    ));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(data_lines(&text).len(), 10);
}

#[test]
fn quant_sweep_writes_grid_and_cdf() {
    let dir = setup();
    ok(beampred(
        dir.path(),
        &["quant-sweep", "--config", "run.toml", "--dataset", "data.jsonl", "--out", "q.csv", "--cdf-out", "cdf.csv"],
    ));
    let text = std::fs::read_to_string(dir.path().join("q.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "p_upper,p_lower,r_cqi,rmse_db,frac_below_1db,p_align,r_throughput");
    assert_eq!(lines.len(), 1 + 3);
    assert!(lines[1].starts_with(",,,"));
    assert!(lines[2].starts_with("-30,-70,1,"));
    let cdf = std::fs::read_to_string(dir.path().join("cdf.csv")).unwrap();
    assert!(cdf.starts_with("p_upper,p_lower,r_cqi,abs_error_db,cdf\n"));
}

#[test]
fn quant_sweep_all_beams_fills_alignment() {
    let dir = setup();
    let out = ok(beampred(
        dir.path(),
        &["quant-sweep", "--config", "run.toml", "--dataset", "data.jsonl", "--all-beams"],
    ));
    let text = String::from_utf8(out.stdout).unwrap();
    for l in &data_lines(&text)[1..] {
        let cols: Vec<&str> = l.split(',').collect();
        let p_a: f64 = cols[5].parse().unwrap();
        let r_t: f64 = cols[6].parse().unwrap();
        assert!((0.0..=1.0).contains(&p_a));
        assert!(r_t > 0.0 && r_t <= 1.0 + 1e-12);
    }
}

#[test]
fn eval_allbeams_reports_classifier_and_regressions() {
    let dir = setup();
    ok(beampred(
        dir.path(),
        &["eval-allbeams", "--config", "run.toml", "--dataset", "data.jsonl", "--out", "t3.csv", "--report", "t3.json"],
    ));
    let text = std::fs::read_to_string(dir.path().join("t3.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "model,p_upper,p_lower,r_cqi,p_align,r_throughput,rmse_db");
    assert!(lines[1].starts_with("classifier,,,,"));
    assert!(lines[2].starts_with("regression,,,,"));
    assert!(lines[3].starts_with("regression,-20,-70,2,"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t3.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 3);
}

#[test]
fn experiment_outputs_are_byte_identical_on_rerun() {
    let dir = setup();
    for cmd in ["table2", "awareness-sweep", "quant-sweep"] {
        let a = ok(beampred(dir.path(), &[cmd, "--config", "run.toml", "--dataset", "data.jsonl"])).stdout;
        let b = ok(beampred(dir.path(), &[cmd, "--config", "run.toml", "--dataset", "data.jsonl", "--workers", "1"])).stdout;
        assert_eq!(a, b, "{cmd}");
    }
}

#[test]
fn dump_paths_emits_scene_and_path_array() {
    let dir = setup();
    let out = ok(beampred(dir.path(), &["dump-paths", "--config", "run.toml", "--scene-id", "3"]));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["scene_id"], 3);
    assert!(v["paths"].is_array());
    assert!(v["scene"]["vehicles"].is_array());
}
