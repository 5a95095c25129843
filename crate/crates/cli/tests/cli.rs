use std::path::Path;
use std::process::{Command, Output};

use decaylife_core::lifetime::ratio_case_b;
use decaylife_core::optimize::{envelope, log_grid};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decaylife"))
        .args(args)
        .env_remove("DECAYLIFE_SEED")
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("json on stderr")
}

#[test]
fn eval_bmeson_maximizer() {
    let v = json_stdout(&run(&[
        "eval", "--preset", "bmeson", "--bmag", "0.20859", "--theta", "1.5707963267948966", "--format", "json",
    ]));
    let r = v["ratio"].as_f64().unwrap();
    assert!((r - 2.64).abs() < 0.01, "R = {r}");
    assert_eq!(v["preset"]["provenance"], "B meson: ΔM/Γ≈0.77, k≈1");
    assert!((v["coupling"].as_f64().unwrap() - 0.385).abs() < 1e-12);
}

#[test]
fn eval_dmeson_default_post() {
    let v = json_stdout(&run(&["eval", "--preset", "dmeson", "--format", "json"]));
    assert!((v["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn eval_degenerate_mass() {
    let v = json_stdout(&run(&["eval", "--dm", "0", "--gl", "1", "--gh", "2", "--bmag", "0.3", "--theta", "1", "--format", "json"]));
    assert!(v["weak_value"].is_null());
    assert!(v["shifted_weak_value"]["re"].is_number());
    assert!(v["ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_figure_number_is_usage_error() {
    let out = run(&["figure", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "usage");
}

#[test]
fn zero_postselection_is_domain_error() {
    let out = run(&["eval", "--dm", "0", "--gl", "1", "--gh", "1", "--post", "0,0,1,0"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["exit_code"], 3);
}

#[test]
fn preset_and_explicit_system_conflict() {
    let out = run(&["eval", "--preset", "dmeson", "--gl", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn sample_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = run(&["sample", "--preset", "bsmeson", "--n", "100000", "--seed", "1", "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(&a.join("times.csv")), read(&b.join("times.csv")));
    assert_eq!(read(&a.join("estimate.json")), read(&b.join("estimate.json")));
    let est: Value = serde_json::from_slice(&read(&a.join("estimate.json"))).unwrap();
    assert!(est["z"].as_f64().unwrap().abs() < 4.0);
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let flag = run(&["sample", "--preset", "bmeson", "--n", "500", "--seed", "9", "--out", a.to_str().unwrap()]);
    assert!(flag.status.success());
    let env = Command::new(env!("CARGO_BIN_EXE_decaylife"))
        .args(["sample", "--preset", "bmeson", "--n", "500", "--out", b.to_str().unwrap()])
        .env("DECAYLIFE_SEED", "9")
        .output()
        .unwrap();
    assert!(env.status.success());
    assert_eq!(read(&a.join("times.csv")), read(&b.join("times.csv")));
}

#[test]
fn sweep_matches_equal_splitting_limit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep", "--dm-over-gamma", "1", "--k-grid", "1:10:40:lin", "--bmag", "0.4", "--theta", "2.2", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,b_mag,theta,R"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let want = ratio_case_b(f[0], f[1], f[2]).unwrap();
        assert!((f[3] - want).abs() <= 1e-12, "k = {}: {} vs {want}", f[0], f[3]);
        rows += 1;
    }
    assert_eq!(rows, 40);
}

#[test]
fn csv_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env.csv");
    let out = run(&["envelope", "--dm-over-gamma", "0.5", "--k-grid", "0.01:100:25", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let want = envelope(0.5, &log_grid(0.01, 100.0, 25).unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,upper,lower,limit"));
    for (i, line) in lines.enumerate() {
        let f: Vec<f64> = line.split(',').take(3).map(|x| x.parse().unwrap()).collect();
        assert_eq!(f[0].to_bits(), want.k_grid[i].to_bits(), "{line}");
        assert_eq!(f[1].to_bits(), want.upper[i].to_bits(), "{line}");
        assert_eq!(f[2].to_bits(), want.lower[i].to_bits(), "{line}");
    }
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "dm-over-gamma = 1000\nk = 3\nbmag = 0.7071067811865476\ntheta = 3.141592653589793\n").unwrap();
    let v = json_stdout(&run(&["eval", "--config", cfg.to_str().unwrap(), "--format", "json"]));
    assert!((v["ratio"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn validate_passes() {
    let out = run(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("check,status,detail"));
    assert!(!text.contains(",FAIL,"));
}
