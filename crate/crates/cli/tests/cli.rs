//! End-to-end tests of the `jumpdiff` binary: flag validation, exit codes,
//! output formats, and the reproducibility contract of `run.json`.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn jumpdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumpdiff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_closes(path: &Path, closes: &[f64]) {
    let mut body = String::from("Date,Close\n");
    let start = chrono::NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    for (i, c) in closes.iter().enumerate() {
        body.push_str(&format!("{},{}\n", start + chrono::Duration::days(i as i64), c));
    }
    fs::write(path, body).unwrap();
}

#[test]
fn simulate_degenerate_gbm_is_flat_at_s0() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let res = jumpdiff(&[
        "simulate", "--model", "gbm", "--mu", "0", "--sigma", "0", "--s0", "100", "--paths", "1",
        "--steps", "1", "--t", "1", "--seed", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let csv = fs::read_to_string(out.join("paths.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "time,path_0");
    assert_eq!(lines[1], "0.000000000,1.00000000000e2");
    assert_eq!(lines[2], "1.000000000,1.00000000000e2");
    assert_eq!(lines.len(), 3);
    assert!(out.join("run.json").exists());
}

#[test]
fn simulate_same_flags_twice_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = jumpdiff(&[
            "simulate", "--model", "merton", "--mu", "0.1", "--sigma", "0.5", "--lambda", "10",
            "--mu-j", "0.05", "--sigma-j", "0.025", "--s0", "100", "--paths", "16", "--steps",
            "32", "--t", "2", "--seed", "42", "--out", out.to_str().unwrap(),
        ]);
        assert_exit(&res, 0);
    }
    assert_eq!(fs::read(a.join("paths.csv")).unwrap(), fs::read(b.join("paths.csv")).unwrap());
}

#[test]
fn simulate_rejects_flags_from_another_model() {
    let dir = TempDir::new().unwrap();
    let res = jumpdiff(&[
        "simulate", "--model", "gbm", "--sigma", "0.2", "--eta-up", "3", "--t", "1", "--steps",
        "1", "--paths", "1", "--seed", "1", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_exit(&res, 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("--eta-up"));
}

#[test]
fn fit_rejects_burn_in_not_below_iterations() {
    let dir = TempDir::new().unwrap();
    let res = jumpdiff(&[
        "fit", "--input", "does-not-matter.csv", "--burn-in", "100", "--iterations", "100",
        "--seed", "1", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_exit(&res, 2);
}

#[test]
fn fit_constant_prices_flags_sigma_floor_and_succeeds() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("const.csv");
    write_closes(&input, &vec![100.0; 40]);
    let out = dir.path().join("run");
    let res = jumpdiff(&[
        "fit", "--input", input.to_str().unwrap(), "--iterations", "400", "--burn-in", "100",
        "--thinning", "2", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["diagnostics"]["sigma_floor_hit"], true);
    let chain = fs::read_to_string(out.join("chain.csv")).unwrap();
    assert!(chain.starts_with("iter,mu,sigma,lambda,mu_j,sigma_j"));
}

#[test]
fn detect_finds_single_up_spike() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("spike.csv");
    let mut closes = vec![100.0];
    for i in 1..30 {
        let diff = if i == 15 { 10.0 } else { 0.1 };
        closes.push(closes[i - 1] + diff);
    }
    write_closes(&input, &closes);
    let res = jumpdiff(&[
        "detect", "--input", input.to_str().unwrap(), "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let det = stdout_json(&res);
    assert_eq!(det["up_count"], 1);
    assert_eq!(det["down_count"], 0);
    let file: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("run/detection.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(file, det);
}

#[test]
fn detect_equal_diffs_yield_zero_counts() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("flat.csv");
    let closes: Vec<f64> = (0..30).map(|i| 100.0 + i as f64).collect();
    write_closes(&input, &closes);
    let res = jumpdiff(&[
        "detect", "--input", input.to_str().unwrap(), "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let det = stdout_json(&res);
    assert_eq!(det["up_count"], 0);
    assert_eq!(det["down_count"], 0);
}

#[test]
fn detect_rejects_malformed_input_file() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("broken.csv");
    fs::write(&input, "Date,Close\n2015-01-01,abc\n").unwrap();
    let res = jumpdiff(&[
        "detect", "--input", input.to_str().unwrap(), "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_exit(&res, 3);
}

#[test]
fn price_call_zero_vol_at_the_money_is_worthless() {
    let dir = TempDir::new().unwrap();
    let res = jumpdiff(&[
        "price", "call", "--model", "gbm", "--sigma", "0", "--mu", "0", "--s0", "100", "--k",
        "100", "--seed", "1", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let est = stdout_json(&res);
    assert_eq!(est["mean"], 0.0);
}

#[test]
fn price_call_risk_neutral_matches_closed_form() {
    // Black-Scholes with s0 = K = 100, sigma = 0.4, r = 0.08, T = 1.
    let oracle = 19.386356841700632;
    let dir = TempDir::new().unwrap();
    let res = jumpdiff(&[
        "price", "call", "--model", "gbm", "--risk-neutral", "--r", "0.08", "--sigma", "0.4",
        "--s0", "100", "--k", "100", "--paths", "100000", "--seed", "2024", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let est = stdout_json(&res);
    let mean = est["mean"].as_f64().unwrap();
    let se = est["std_error"].as_f64().unwrap();
    assert!(se > 0.0 && (mean - oracle).abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn price_annuity_guarantee_is_nonnegative() {
    let dir = TempDir::new().unwrap();
    let res = jumpdiff(&[
        "price", "annuity", "--model", "split", "--mu", "0.04", "--sigma", "0.2", "--lambda-up",
        "1", "--eta-up", "25", "--lambda-down", "2", "--eta-down", "20", "--g", "0.02", "--c",
        "0.01", "--k", "0", "--t", "10", "--paths", "2000", "--seed", "7", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let est = stdout_json(&res);
    assert!(est["mean"].as_f64().unwrap() >= 0.0);
}

#[test]
fn surface_single_cell_at_zero_arrivals_equals_baseline() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let res = jumpdiff(&[
        "surface", "--lambda-axis", "0:0:1", "--intensity-axis", "0.1:0.1:1", "--mu", "0.05",
        "--sigma", "0.3", "--paths", "2000", "--seed", "4", "--out", out.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("surface.json")).unwrap()).unwrap();
    let baseline = sidecar["baseline"]["mean"].as_f64().unwrap();
    let csv = fs::read_to_string(out.join("surface.csv")).unwrap();
    let cell: f64 = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(cell, baseline);
}

#[test]
fn surface_rejects_malformed_axis_spec() {
    let dir = TempDir::new().unwrap();
    let res = jumpdiff(&[
        "surface", "--lambda-axis", "0:4", "--intensity-axis", "0:0.8:3", "--mu", "0",
        "--sigma", "0.2", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_exit(&res, 2);
}

#[test]
fn manifest_reexecution_reproduces_outputs_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    // no --seed: the manifest must record the generated one
    let res = jumpdiff(&[
        "surface", "--lambda-axis", "0:2:3", "--intensity-axis", "0:0.4:3", "--mu", "0.05",
        "--sigma", "0.3", "--paths", "500", "--out", first.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(first.join("run.json")).unwrap()).unwrap();
    let mut argv: Vec<String> = manifest["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert!(argv.contains(&"--seed".to_string()));

    let second = dir.path().join("second");
    let out_pos = argv.iter().position(|a| a == "--out").unwrap();
    argv[out_pos + 1] = second.to_str().unwrap().to_string();
    let args: Vec<&str> = argv.iter().map(String::as_str).collect();
    let res = jumpdiff(&args);
    assert_exit(&res, 0);
    assert_eq!(
        fs::read(first.join("surface.csv")).unwrap(),
        fs::read(second.join("surface.csv")).unwrap()
    );
}

#[test]
fn worker_count_hint_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("w1"), dir.path().join("w4"));
    for (out, workers) in [(&a, "1"), (&b, "4")] {
        let res = jumpdiff(&[
            "price", "call", "--model", "kou", "--mu", "0.05", "--sigma", "0.3", "--lambda",
            "2", "--p", "0.4", "--eta1", "10", "--eta2", "5", "--s0", "100", "--k", "105",
            "--paths", "4000", "--steps", "12", "--seed", "11", "--workers", workers, "--out",
            out.to_str().unwrap(),
        ]);
        assert_exit(&res, 0);
    }
    assert_eq!(
        fs::read(a.join("estimate.json")).unwrap(),
        fs::read(b.join("estimate.json")).unwrap()
    );
}
