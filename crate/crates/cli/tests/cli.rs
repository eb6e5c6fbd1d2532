use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use csd1d_cli::RunConfig;
use serde_json::{json, Value};
use tempfile::TempDir;

fn csd1d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csd1d"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn gaussian(center: f64, width: f64, amplitude: f64) -> Value {
    json!({"kind": "gaussian", "center": center, "width": width, "amplitude": amplitude, "phase": 0.3})
}

fn base_config(dir: &Path) -> Value {
    json!({
        "grid": {"x_min": -8.0, "x_max": 8.0, "n_cells": 256},
        "model": {"alpha": "gamma0", "m": 1.0, "p": 2.0},
        "data": {
            "psi1": gaussian(-0.5, 0.7, 0.2),
            "psi2": gaussian(0.5, 0.6, 0.2),
            "a0": gaussian(0.0, 1.0, 0.2),
            "a1": gaussian(0.2, 0.8, 0.2)
        },
        "solver": {"backend": "picard_slab", "slab_T": 0.25},
        "run": {"T_final": 1.0, "checks": ["charge", "intrinsic", "corollary_envelope", "concentration", "bilinear"]},
        "output": {"directory": dir.join("out"), "formats": ["csv", "json"]}
    })
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn zero_data_solves_to_zero_and_passes() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base_config(tmp.path());
    for k in ["psi1", "psi2", "a0", "a1"] {
        cfg["data"][k] = json!({"kind": "zero"});
    }
    let out = csd1d(&["solve", write_config(tmp.path(), "zero.json", &cfg).to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&tmp.path().join("out/trajectory.csv"));
    assert_eq!(rows[0].len(), 18);
    assert_eq!(rows.len(), 1 + 17);
    for row in &rows[1..] {
        assert!(row[1..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0));
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 6);
    assert!(reports.iter().all(|r| r["pass"] == true));
}

#[test]
fn one_sided_massless_demo_conserves_charge() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base_config(tmp.path());
    cfg["model"]["m"] = json!(0.0);
    cfg["data"]["psi2"] = cfg["data"]["psi1"].clone();
    cfg["solver"]["backend"] = json!("march");
    let out = csd1d(&["solve", write_config(tmp.path(), "demo.json", &cfg).to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&tmp.path().join("out/trajectory.csv"));
    let charge: Vec<f64> = rows[1..].iter().map(|r| r[17].parse().unwrap()).collect();
    let q0 = charge[0];
    assert!(q0 > 0.0);
    assert!(charge.iter().all(|q| ((q - q0) / q0).abs() <= 1e-12), "{charge:?}");
    let minus_l1: Vec<f64> = rows[1..].iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(minus_l1.iter().all(|v| *v == 0.0));
}

#[test]
fn solve_outputs_are_deterministic_and_echo_round_trips() {
    let tmp = TempDir::new().unwrap();
    let cfg = base_config(tmp.path());
    let path = write_config(tmp.path(), "run.json", &cfg);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = csd1d(&["solve", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["trajectory.csv", "report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(a.join("meta.json")).unwrap()).unwrap();
    let echoed = RunConfig::from_json(&meta["config"].to_string()).unwrap();
    assert_eq!(echoed, RunConfig::load(&path).unwrap());
    assert!(meta["versions"]["csd1d"].is_string());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let slabs = report["slabs"].as_array().unwrap();
    assert_eq!(slabs.len(), 4);
    assert!(!slabs[0]["history"].as_array().unwrap().is_empty());
}

#[test]
fn schema_errors_exit_two_and_name_the_key() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base_config(tmp.path());
    cfg["grid"]["n_cells"] = json!(1);
    let out = csd1d(&["solve", write_config(tmp.path(), "one.json", &cfg).to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    let mut cfg = base_config(tmp.path());
    cfg["solver"]["slab_length"] = json!(0.5);
    let out = csd1d(&["solve", write_config(tmp.path(), "typo.json", &cfg).to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("slab_length"));

    let out = csd1d(&["solve", tmp.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn convergence_failure_exits_three_with_report() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base_config(tmp.path());
    cfg["solver"]["max_picard_iters"] = json!(3);
    cfg["solver"]["auto_slab"] = json!(false);
    let out = csd1d(&["solve", write_config(tmp.path(), "cap.json", &cfg).to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "convergence_failure");
    assert_eq!(report["failed_history"].as_array().unwrap().len(), 3);
    assert!(tmp.path().join("out/meta.json").exists());
}

#[test]
fn domain_overflow_exits_four() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base_config(tmp.path());
    cfg["grid"] = json!({"x_min": -2.0, "x_max": 2.0, "n_cells": 128});
    cfg["run"]["T_final"] = json!(1.5);
    let out = csd1d(&["solve", write_config(tmp.path(), "small.json", &cfg).to_str().unwrap()]);
    assert_eq!(code(&out), 4);
}

#[test]
fn failing_check_exits_one() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base_config(tmp.path());
    // A spike much narrower than the unit scale: the sup-norm half of the
    // intrinsic bound is not implied by the L^1 data norm and fails.
    cfg["grid"]["n_cells"] = json!(1024);
    cfg["model"]["p"] = json!(1.0);
    cfg["data"] = json!({
        "psi1": gaussian(0.0, 0.1, 1.0),
        "psi2": {"kind": "zero"},
        "a0": {"kind": "zero"},
        "a1": {"kind": "zero"}
    });
    cfg["run"] = json!({"T_final": 0.5, "checks": ["intrinsic"]});
    let out = csd1d(&["solve", write_config(tmp.path(), "spike.json", &cfg).to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "checks_failed");
    assert_eq!(report["reports"][0]["metadata"]["worst_norm"], "linf");
    assert!(report["reports"][0]["metadata"]["min_margin_lp"].as_f64().unwrap() >= 0.0);
}

#[test]
fn convergence_levels_and_orders() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base_config(tmp.path());
    cfg["run"]["T_final"] = json!(0.5);
    let path = write_config(tmp.path(), "smooth.json", &cfg);
    assert_eq!(code(&csd1d(&["convergence", path.to_str().unwrap(), "--levels", "2"])), 2);

    let out = csd1d(&["convergence", path.to_str().unwrap(), "--levels", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&tmp.path().join("out/convergence.csv"));
    assert_eq!(rows[0], ["field", "n_coarse", "n_fine", "sup_diff", "order"]);
    assert_eq!(rows.len(), 1 + 8);
    for r in rows[1..].iter().filter(|r| r[4] != "NaN") {
        let order: f64 = r[4].parse().unwrap();
        assert!((order - 2.0).abs() <= 0.2, "{r:?}");
    }

    let mut free = base_config(tmp.path());
    free["model"]["m"] = json!(0.0);
    free["data"] = json!({
        "psi1": {"kind": "box", "center": -0.5, "width": 1.0, "amplitude": 1.0},
        "psi2": {"kind": "box", "center": -0.5, "width": 1.0, "amplitude": 1.0},
        "a0": {"kind": "zero"},
        "a1": {"kind": "zero"}
    });
    free["solver"]["backend"] = json!("march");
    let path = write_config(tmp.path(), "free.json", &free);
    let out = csd1d(&["convergence", path.to_str().unwrap(), "--levels", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&tmp.path().join("out/convergence.csv"));
    for r in &rows[1..] {
        assert!(r[3].parse::<f64>().unwrap() <= 1e-12, "{r:?}");
    }
}

#[test]
fn verify_bilinear_has_hundred_passing_rows() {
    let tmp = TempDir::new().unwrap();
    let out = csd1d(&["verify", "bilinear", "--seed", "1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let rows = read_csv(&tmp.path().join("verify_bilinear.csv"));
    assert_eq!(rows[0], ["name", "seed", "lhs", "rhs", "margin", "pass"]);
    assert_eq!(rows.len(), 101);
    assert!(rows[1..].iter().all(|r| r[5] == "true"));
}

#[test]
fn verify_unknown_suite_exits_two() {
    let tmp = TempDir::new().unwrap();
    let out = csd1d(&["verify", "nonsense", "--seed", "1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_contraction_with_large_data_fails() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = csd1d(&["verify", "contraction", "--seed", "3", "--out", dir]);
    assert_eq!(code(&out), 0);
    let out = csd1d(&["verify", "contraction", "--seed", "3", "--out", dir, "--data-scale", "1000"]);
    assert_eq!(code(&out), 1);
    let rows = read_csv(&tmp.path().join("verify_contraction.csv"));
    assert!(rows[1..].iter().any(|r| r[5] == "false"));
}

#[test]
fn thread_count_does_not_change_rows() {
    let tmp = TempDir::new().unwrap();
    let run = |threads: &str, sub: &str| {
        let dir = tmp.path().join(sub);
        let out = Command::new(env!("CARGO_BIN_EXE_csd1d"))
            .args(["verify", "localization", "--seed", "11", "--out", dir.to_str().unwrap()])
            .env("CSD1D_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        std::fs::read(dir.join("verify_localization.csv")).unwrap()
    };
    assert_eq!(run("1", "one"), run("3", "three"));
}
