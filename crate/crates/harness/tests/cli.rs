use std::fs;
use std::process::{Command, Output};

use nalgebra::DMatrix;

fn hdlin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdlin"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_group(path: &std::path::Path, n: usize, p: usize, shift: f64, seed: u64) {
    let mut state = seed;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let m = DMatrix::from_fn(n, p, |_, _| next() + shift);
    hdlin_harness::input::write_matrix(path, &m).unwrap();
}

#[test]
fn verify_oracle_passes() {
    let out = hdlin(&["verify-oracle", "--no-monte-carlo"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS"));
    assert!(text.contains("max relative error"));
}

#[test]
fn verify_oracle_negative_control() {
    let out = hdlin(&["verify-oracle", "--no-monte-carlo", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(hdlin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hdlin(&["run"]).status.code(), Some(1));
    assert_eq!(hdlin(&["run", "/nonexistent/config.toml"]).status.code(), Some(1));
    assert_eq!(hdlin(&["--help"]).status.code(), Some(0));
}

#[test]
fn test_subcommand_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_group(&a, 30, 4, 0.0, 1);
    write_group(&b, 35, 4, 0.0, 2);
    let out = hdlin(&[
        "test",
        "--groups",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--alpha",
        "0.1",
        "--kurtosis",
        "zero",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["alpha"], 0.1);
    assert_eq!(v["variant"], "general");
    assert_eq!(v["kurtosis"]["method"], "zero");
    assert_eq!(v["ratios"]["denom_dof"], 29);
    let t = v["t_ours"].as_f64().unwrap();
    let p = v["p_value"].as_f64().unwrap();
    assert_eq!(v["reject"].as_bool().unwrap(), p < 0.1);
    assert!(t.is_finite());

    let c = dir.path().join("c.csv");
    write_group(&c, 40, 4, 3.0, 3);
    let out = hdlin(&[
        "test",
        "--groups",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        c.to_str().unwrap(),
        "--beta",
        "1,1,-1",
        "--mu0",
        "-3",
        "--variant",
        "common-cov",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["variant"], "common_cov");
    assert_eq!(v["ratios"]["denom_dof"], 102);
}

#[test]
fn numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_group(&a, 6, 8, 0.0, 1);
    write_group(&b, 7, 8, 0.0, 2);
    let out = hdlin(&["test", "--groups", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_config_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out_dir = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            r#"
seed = 3
replications = 20
out = "{}"

[[cell]]
variant = "two_sample"
distribution = "normal"
p = 3
sizes = [10, 12]
v0 = 0.5
epsilon = [0.0, 1.0]
"#,
            out_dir.display()
        ),
    )
    .unwrap();
    let out = hdlin(&["--threads", "2", "run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(out_dir.join("summary.md").exists());
    assert!(fs::read_dir(&out_dir)
        .unwrap()
        .any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));
}
