use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use bosenet::experiment::ExperimentConfig;

fn bosenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bosenet")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_single_ray() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = bosenet(&["simulate", "--mode", "c12", "--I", "2", "--kernel", "const:1", "--init", "1,1", "--t-max", "40", "--out", out]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(dir.path().join("traj_ray0.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,F_1,F_2,energy,mass,lyapunov,max_err");
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["generator"], "ChaCha8");
    let ray = &summary["rays"][0];
    assert!(ray["fit"]["slope"].as_f64().unwrap() < 0.0);
    assert_eq!(ray["conserved_initial"]["energy"], 3.0);
    let cfg = ExperimentConfig::from_json(&summary["config"].to_string()).unwrap();
    assert_eq!(serde_json::to_value(&cfg).unwrap(), summary["config"]);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--mode", "c12+c22", "--I", "4", "--seed", "7", "--t-max", "2", "--out", dir.path().to_str().unwrap()];
    let mut outputs = Vec::new();
    for _ in 0..2 {
        assert!(bosenet(&args).status.success());
        let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
        outputs.push((read("summary.json"), read("traj_ray0.csv")));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn simulate_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let run = bosenet(&["simulate", "--mode", "c12", "--lattice-R", "3", "--seed", "3", "--t-max", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = read_json(&dir.path().join("summary.json"));
    let rays = summary["rays"].as_array().unwrap();
    let expected = bosenet::lattice::enumerate_rays(&bosenet::lattice::LatticeConfig::new(3.0).unwrap());
    assert_eq!(rays.len(), expected.len());
    for (ray, want) in rays.iter().zip(&expected) {
        assert_eq!(ray["I"].as_u64().unwrap() as usize, want.len);
        assert_eq!(ray["frozen"].as_bool().unwrap(), want.len == 1);
        let i = ray["index"].as_u64().unwrap();
        assert!(dir.path().join(format!("traj_ray{i}.csv")).exists());
    }
}

#[test]
fn simulate_c22_two_points_is_fully_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let run = bosenet(&["simulate", "--mode", "c22", "--I", "2", "--t-max", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains("fully degenerate"));
    assert_eq!(read_json(&dir.path().join("summary.json"))["fully_degenerate"], true);
}

#[test]
fn config_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let first = bosenet(&["simulate", "--mode", "c13", "--I", "4", "--seed", "5", "--t-max", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(first.status.success());
    let summary = read_json(&dir.path().join("summary.json"));
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, summary["config"].to_string()).unwrap();
    let again = tempfile::tempdir().unwrap();
    let mut cfg = summary["config"].clone();
    cfg["out"] = Value::String(again.path().to_str().unwrap().into());
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let second = bosenet(&["simulate", "--config", cfg_path.to_str().unwrap(), "--mode", "c12"]);
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    assert_eq!(
        std::fs::read(dir.path().join("traj_ray0.csv")).unwrap(),
        std::fs::read(again.path().join("traj_ray0.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(bosenet(&["simulate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bosenet(&["simulate", "--mode", "c99", "--I", "2"]).status.code(), Some(2));
    assert_eq!(bosenet(&["simulate", "--I", "2", "--init", "1,-1"]).status.code(), Some(2));
    assert_eq!(bosenet(&["simulate", "--I", "2", "--t-max", "-1"]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let run = bosenet(&["simulate", "--I", "3", "--init", "1e120,1e120,1e120", "--t-max", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn equilibrium_commands() {
    let v = json_of(&bosenet(&["equilibrium", "--mode", "c12", "--energy", "1", "--I", "1"]));
    assert_eq!(v["family"], "bose");
    assert!((v["rho"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    assert!((v["f_star"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let v = json_of(&bosenet(&["equilibrium", "--mode", "c22", "--mass", "1.476190", "--energy", "2.095238", "--I", "3"]));
    assert_eq!(v["family"], "two_param");
    assert!((v["rho1"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-5);
    assert!((v["rho2"].as_f64().unwrap() - 2.0 * std::f64::consts::LN_2).abs() < 1e-5);

    let bad = bosenet(&["equilibrium", "--mode", "c22", "--mass", "2", "--energy", "1", "--I", "3"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("infeasible"));
}

#[test]
fn network_commands() {
    let v = json_of(&bosenet(&["network", "--I", "2", "--kernel", "const:1"]));
    assert_eq!(v["reaction_count"], 3);
    assert_eq!(v["persistence"]["siphons"][0]["siphon"], serde_json::json!([1, 2]));
    assert_eq!(v["persistent"], true);
    assert!(v["equivalence_residual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(json_of(&bosenet(&["network", "--I", "3"]))["reaction_count"], 7);
    let one = json_of(&bosenet(&["network", "--I", "1"]));
    assert_eq!(one["reaction_count"], 0);
    assert_eq!(one["persistent"], true);
}

#[test]
fn network_over_the_siphon_bound_is_partial() {
    let run = bosenet(&["network", "--I", "17"]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stderr).contains("warning"));
    let v: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert!(v["persistence"].is_null());
}

#[test]
fn analyze_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = bosenet(&["analyze", "--mode", "c12", "--I", "2", "--init", "1,1", "--t-max", "40", "--out", out]);
    let v = json_of(&run);
    assert_eq!(v["verdict"], "negative definite");
    assert!(v["relative_mismatch"].as_f64().unwrap() <= 0.2);
    assert_eq!(read_json(&dir.path().join("report.json")), v);

    let frozen = json_of(&bosenet(&["analyze", "--mode", "c12", "--I", "1", "--init", "1", "--t-max", "1", "--out", out]));
    assert_eq!(frozen["verdict"], "frozen");
    assert!(frozen["fitted_rate"].is_null());

    let all = json_of(&bosenet(&["analyze", "--mode", "c12+c22+c13", "--I", "4", "--seed", "1", "--t-max", "10", "--out", out]));
    assert_eq!(all["verdict"], "negative definite");
    assert_eq!(all["equilibrium"]["family"], "bose");
}
