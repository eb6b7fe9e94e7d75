use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circle-rds"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn lists_every_preset() {
    let tmp = TempDir::new().unwrap();
    let out = bin(&["list-presets"], tmp.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for (name, _) in circle_rds::presets::PRESETS {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn emitted_config_runs() {
    let tmp = TempDir::new().unwrap();
    let out = bin(&["preset", "det-simple", "--emit-config"], tmp.path());
    assert_eq!(code(&out), 0);
    fs::write(tmp.path().join("det.toml"), &out.stdout).unwrap();

    let out = bin(&["run", "det.toml", "--out-dir", "report"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = tmp.path().join("report");
    assert_eq!(summary(&report)["status"], "success");
    assert!(report.join("series.csv").exists());
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout["name"], "det-simple");
}

#[test]
fn default_output_directory_is_named_after_the_experiment() {
    let tmp = TempDir::new().unwrap();
    let out = bin(&["preset", "det-simple"], tmp.path());
    assert_eq!(code(&out), 0);
    assert!(tmp.path().join("out/det-simple/summary.json").exists());
}

#[test]
fn malformed_generator_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let config = r#"
name = "broken"
seed = 1
realizations = 10
horizon = 10

[system]
kind = "ifs"
generators = ["sine(0.9)"]

[estimator]
kind = "sync"
pairs = [[0.1, 0.6]]
"#;
    fs::write(tmp.path().join("broken.toml"), config).unwrap();
    let out = bin(&["run", "broken.toml"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn missing_file_and_unknown_preset_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&bin(&["run", "nope.toml"], tmp.path())), 2);
    assert_eq!(code(&bin(&["preset", "kn05"], tmp.path())), 2);
}

#[test]
fn failed_precondition_is_inconclusive() {
    let tmp = TempDir::new().unwrap();
    let out = bin(&["preset", "rotations-nosync", "--emit-config"], tmp.path());
    let text = String::from_utf8(out.stdout).unwrap().replace("expect = false", "expect = true");
    fs::write(tmp.path().join("rot.toml"), text).unwrap();

    let out = bin(&["run", "rot.toml", "--out-dir", "rot"], tmp.path());
    assert_eq!(code(&out), 1);
    let s = summary(&tmp.path().join("rot"));
    assert_eq!(s["status"], "inconclusive");
    let failed: Vec<_> = s["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["kind"], "compressibility");
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = TempDir::new().unwrap();
    let out = bin(&["preset", "spread-decay", "--seed", "42", "--out-dir", "s"], tmp.path());
    assert_eq!(code(&out), 0);
    assert_eq!(summary(&tmp.path().join("s"))["config"]["seed"], 42);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let tmp = TempDir::new().unwrap();
    for (workers, dir) in [("1", "one"), ("8", "eight")] {
        let out = bin(&["preset", "spread-decay", "--workers", workers, "--out-dir", dir], tmp.path());
        assert_eq!(code(&out), 0);
    }
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("one")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 2);
    for name in names {
        let a = fs::read(tmp.path().join("one").join(&name)).unwrap();
        let b = fs::read(tmp.path().join("eight").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs");
    }
}
