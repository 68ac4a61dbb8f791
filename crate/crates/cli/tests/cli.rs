use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sos_lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sos-lab"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("SOS_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_json(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn validate_runs_the_invariant_suite() {
    let dir = TempDir::new().unwrap();
    let out = sos_lab(&["validate"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("validate.json"));
    assert_eq!(report["passed"], Value::Bool(true));
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config_hash"], report["config_hash"]);
    assert_eq!(manifest["timestamps"], Value::Null);
}

#[test]
fn eigen_emits_table_and_header() {
    let dir = TempDir::new().unwrap();
    let out = sos_lab(&["eigen", "--N", "10000", "--dist", "double_geometric"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("eigenpair.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    assert_eq!(lines.next().unwrap(), "s,h");
    let header = read_json(&dir.path().join("eigenpair.json"));
    assert_eq!(header["header"]["n"], 10000);
    let lambda = header["header"]["lambda"].as_f64().unwrap();
    assert!(lambda > 0.99 && lambda < 1.0);
    assert!(dir.path().join("eigenfunction.svg").exists());
}

#[test]
fn identical_config_gives_identical_bytes() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["scaling-study", "--N-list", "100,400", "--paths", "400", "--seed", "3"];
    assert!(sos_lab(&args, a.path()).status.success());
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "2"]);
    assert!(sos_lab(&with_threads, b.path()).status.success());
    for name in ["scaling.json", "scaling.csv", "path_stats.csv", "manifest.json", "covariance.svg"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn env_var_overrides_out_dir() {
    let (flag, env) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let out = Command::new(env!("CARGO_BIN_EXE_sos-lab"))
        .args(["eigen", "--N", "100", "--formats", "json", "--out-dir"])
        .arg(flag.path())
        .env("SOS_LAB_OUT", env.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(env.path().join("eigenpair.json").exists());
    assert!(!flag.path().join("eigenpair.json").exists());
    assert!(!env.path().join("eigenpair.csv").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"command": "eigen", "N": 400, "dist": {"kind": "lazy_simple_walk", "p0": 0.25}, "seed": 9}"#,
    )
    .unwrap();
    let out = sos_lab(&["--config", cfg.to_str().unwrap(), "--N", "900"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["N"], 900);
    assert_eq!(manifest["config"]["dist"]["p0"], 0.25);
    assert_eq!(manifest["seed"], 9);
}

#[test]
fn unknown_config_field_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"command": "eigen", "temperature": 3}"#).unwrap();
    let out = sos_lab(&["--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "config");
}

#[test]
fn bad_flag_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = sos_lab(&["eigen", "--N", "many"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["exit_code"], 2);
}

#[test]
fn non_convergence_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = sos_lab(&["eigen", "--N", "10000", "--max-iter", "3"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"], "numerical");
}

#[test]
fn resource_cap_exits_4() {
    let dir = TempDir::new().unwrap();
    let out = sos_lab(&["eigen", "--N", "100", "--S-max", "150000"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let out = sos_lab(&["oracle-check", "--N", "8", "--S-max", "6"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["error"], "resource_cap");
}

#[test]
fn oracle_check_report_keys() {
    let dir = TempDir::new().unwrap();
    let out = sos_lab(&["oracle-check", "--N", "3", "--S-max", "2", "--paths", "20000"], dir.path());
    assert!(out.status.success());
    let r = read_json(&dir.path().join("oracle.json"));
    for key in ["Z", "lambda_pow_N", "tv_distance", "marginals", "config_hash"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert!(r["z_rel_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn sample_writes_paths_and_trajectories() {
    let dir = TempDir::new().unwrap();
    let out = sos_lab(&["sample", "--N", "400", "--paths", "3", "--t-grid", "0,0.5,1"], dir.path());
    assert!(out.status.success());
    let paths = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    assert_eq!(paths.lines().nth(1).unwrap(), "stream,x,s");
    assert_eq!(paths.lines().count(), 2 + 3 * 401);
    let traj = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert_eq!(traj.lines().count(), 2 + 3 * 3);
}

#[test]
fn conflicting_commands_rejected() {
    let dir = TempDir::new().unwrap();
    let out = sos_lab(&["eigen", "--command", "validate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
