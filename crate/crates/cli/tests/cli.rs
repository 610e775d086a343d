//! End-to-end checks of the command-line surface: flags, output formats,
//! and the exit-code contract.

use std::process::{Command, Output};

fn hypheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypheat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "invalid JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn eval_emits_kernel_json() {
    let out = hypheat(&[
        "--levels", "8", "eval", "--n", "3", "--t", "1", "--rho", "1",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    for key in ["n", "t", "rho", "logK", "K", "alpha", "margin"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let k = v["K"].as_f64().unwrap();
    assert!((k - 5.4727e-3).abs() < 1e-7, "K = {k}");
    // α_3 = f_1
    let alpha = v["alpha"].as_f64().unwrap();
    assert!((alpha - 1.0 / 1f64.sinh()).abs() < 1e-14);
}

#[test]
fn eval_at_origin_has_no_margin() {
    let out = hypheat(&[
        "--levels", "8", "eval", "--n", "3", "--t", "1", "--rho", "0",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert!(v["margin"].is_null());
    assert!(v["logK"].as_f64().unwrap().is_finite());
}

#[test]
fn alpha_latex_matches_expansion() {
    let out = hypheat(&["--levels", "8", "alpha", "--n", "7", "--format", "latex"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "α_7 = f_1^3 + 6 t f_1 f_2 + 4 t^2 f_3"
    );
}

#[test]
fn alpha_json_has_decimal_coefficients() {
    let out = hypheat(&["--levels", "8", "alpha", "--n", "7"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["n"], 7);
    assert_eq!(v["terms"]["2"][0]["coefficient"], "4");
    assert_eq!(v["terms"]["2"][0]["exponents"]["3"], 1);
    assert_eq!(v["terms"]["0"][0]["exponents"]["1"], 3);
}

#[test]
fn table_dumps_closed_forms() {
    let out = hypheat(&["--levels", "8", "table", "--l-max", "3"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v[2]["level"], 3);
    assert_eq!(v[2]["p"][2], "2");
    assert_eq!(v[2]["q"][1], "-3");
    assert!(v[0]["q"].as_array().unwrap().is_empty());
}

#[test]
fn verify_emits_one_report_and_exit_zero() {
    let out = hypheat(&[
        "--levels",
        "12",
        "verify",
        "yuzhao",
        "--l-max",
        "5",
        "--rho-count",
        "8",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["check_name"], "yuzhao");
    assert_eq!(v["pass"], true);
    for key in ["grid", "worst_value", "worst_location", "tolerance"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn verify_zero_tolerance_fails_with_report() {
    // two floating routes can never agree bit-for-bit across a grid
    let out = hypheat(&[
        "--levels",
        "10",
        "verify",
        "equivalence",
        "--n-max",
        "3",
        "--t-count",
        "3",
        "--rho-count",
        "4",
        "--tol",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["pass"], false);
    assert!(v["worst_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_rejects_unknown_suite() {
    let out = hypheat(&["verify", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
}

#[test]
fn unknown_flag_exits_two_with_usage() {
    let out = hypheat(&["eval", "--does-not-exist", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn domain_error_exits_two() {
    let out = hypheat(&[
        "--levels", "8", "eval", "--n", "4", "--t", "1", "--rho", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd"));
}

#[test]
fn mcf_csv_roundtrips_bit_identically() {
    let out = hypheat(&[
        "--levels",
        "8",
        "mcf",
        "--n",
        "3",
        "--r0",
        "2",
        "--t0",
        "0.2",
        "--d",
        "0.5",
        "--samples",
        "12",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,F,dF_estimate"));
    let mut rows = 0;
    let mut prev_f = f64::INFINITY;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 3);
        for c in &cols {
            let x: f64 = c.parse().unwrap();
            // 17 significant digits reproduce the f64 exactly
            assert_eq!(format!("{x:.16e}"), *c);
        }
        let f: f64 = cols[1].parse().unwrap();
        assert!(f < prev_f, "F not strictly decreasing");
        prev_f = f;
        rows += 1;
    }
    assert_eq!(rows, 12);
}

#[test]
fn mcf_json_format() {
    let out = hypheat(&[
        "--levels",
        "8",
        "mcf",
        "--n",
        "1",
        "--r0",
        "1",
        "--t0",
        "0.1",
        "--samples",
        "10",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v.as_array().unwrap().len(), 10);
    assert!(v[0]["dF_estimate"].as_f64().unwrap() < 0.0);
}

#[test]
fn semigroup_report_passes() {
    let out = hypheat(&[
        "--levels",
        "8",
        "semigroup",
        "--s",
        "0.5",
        "--t",
        "0.5",
        "--d01",
        "0",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["relative_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn thread_cap_env_is_honored() {
    let out = Command::new(env!("CARGO_BIN_EXE_hypheat"))
        .env("HYPHEAT_THREADS", "1")
        .args([
            "--levels",
            "10",
            "verify",
            "heat",
            "--n-max",
            "3",
            "--t-count",
            "3",
            "--rho-count",
            "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());

    let bad = Command::new(env!("CARGO_BIN_EXE_hypheat"))
        .env("HYPHEAT_THREADS", "zero")
        .args(["alpha", "--n", "3"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join("hypheat-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = hypheat(&[
        "--levels",
        "8",
        "--output",
        path.to_str().unwrap(),
        "alpha",
        "--n",
        "5",
        "--format",
        "latex",
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.trim(), "α_5 = f_1^2 + 2 t f_2");
    std::fs::remove_file(&path).ok();
}
