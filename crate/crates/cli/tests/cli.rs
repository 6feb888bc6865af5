//! End-to-end tests driving the `dopt` binary.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn dopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name).display().to_string();
    let mut args = vec!["generate", "--out", &path];
    args.extend_from_slice(extra);
    let out = dopt(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn solve_json(args: &[&str]) -> Value {
    let out = dopt(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

/// Zeroes the timing fields, the only part allowed to differ across runs.
fn strip_timings(mut v: Value) -> Value {
    if let Some(t) = v.get_mut("timings_ms") {
        *t = Value::Null;
    }
    v
}

#[test]
fn generate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a.json", &["--m", "2", "--n", "6", "--k", "3", "--seed", "9"]);
    let b = generate(dir.path(), "b.json", &["--m", "2", "--n", "6", "--k", "3", "--seed", "9"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn duplicated_basis_derand_reaches_ratio_one() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(
        dir.path(),
        "dup.json",
        &["--m", "2", "--n", "4", "--k", "2", "--family", "duplicated-basis"],
    );
    let report = solve_json(&["solve", "--instance", &inst, "--scheme", "derand-proportional"]);
    assert_eq!(report["design"]["ratio"].as_f64().unwrap(), 1.0);
    assert_eq!(report["relaxation"]["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn symmetric_instance_report_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sym3.json");
    std::fs::write(
        &path,
        r#"{"m":2,"n":3,"k":2,"mode":"without_reps","vectors":[[1,0],[0,1],[1,1]]}"#,
    )
    .unwrap();
    let report = solve_json(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--scheme",
        "derand-proportional",
    ]);
    let w = report["relaxation"]["value"].as_f64().unwrap();
    let obj = report["design"]["objective"].as_f64().unwrap();
    let ratio = report["design"]["ratio"].as_f64().unwrap();
    assert!((w - (4.0f64 / 3.0).sqrt()).abs() < 1e-5);
    assert!((obj - 1.0).abs() < 1e-9);
    assert!((ratio - 3.0f64.sqrt() / 2.0).abs() < 1e-5);
    assert!(ratio >= 1.0 / std::f64::consts::E);
}

#[test]
fn reports_are_deterministic_modulo_timings() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(
        dir.path(),
        "g.json",
        &["--m", "3", "--n", "9", "--k", "4", "--seed", "5"],
    );
    let args = [
        "solve",
        "--instance",
        &inst,
        "--scheme",
        "sample-proportional",
        "--trials",
        "7",
        "--seed",
        "11",
    ];
    let a = strip_timings(solve_json(&args));
    let b = strip_timings(solve_json(&args));
    assert_eq!(a, b);
}

#[test]
fn report_invariants_across_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let set_inst = generate(
        dir.path(),
        "set.json",
        &["--m", "2", "--n", "8", "--k", "4", "--seed", "3"],
    );
    let rep_inst = generate(
        dir.path(),
        "rep.json",
        &["--m", "2", "--n", "8", "--k", "4", "--seed", "3", "--mode", "with_reps"],
    );
    let runs: Vec<(&str, &str, Vec<&str>)> = vec![
        ("sample-proportional", set_inst.as_str(), vec!["--trials", "5"]),
        ("derand-proportional", set_inst.as_str(), vec![]),
        ("sample-asymptotic", set_inst.as_str(), vec!["--eps", "0.5"]),
        ("derand-asymptotic", set_inst.as_str(), vec!["--eps", "0.5"]),
        ("sample-repetitions", rep_inst.as_str(), vec!["--trials", "5"]),
        ("derand-repetitions", rep_inst.as_str(), vec!["--eps", "0.25"]),
    ];
    for (scheme, inst, extra) in runs {
        let mut args = vec!["solve", "--instance", inst, "--scheme", scheme, "--seed", "1"];
        args.extend(extra);
        let report = solve_json(&args);
        let ratio = report["design"]["ratio"].as_f64().unwrap();
        assert!(ratio <= 1.0 + 1e-9, "{scheme}: design beats relaxation, ratio {ratio}");
        assert!(report["relaxation"]["converged"].as_bool().unwrap(), "{scheme}");
        let n_trials = report["trial_objectives"].as_array().unwrap().len();
        assert_eq!(n_trials, report["trials"].as_u64().unwrap() as usize);
        // best-of-trials: the reported design attains the max trial objective
        let best_trial = report["trial_objectives"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(report["design"]["objective"].as_f64().unwrap(), best_trial);
        // derandomized schemes must clear their certified floor
        if scheme.starts_with("derand") {
            if let Some(cert) = report.get("certificate").filter(|c| !c.is_null()) {
                let alpha = cert["alpha"].as_f64().unwrap();
                assert!(
                    ratio >= alpha - 1e-6,
                    "{scheme}: ratio {ratio} below certificate alpha {alpha}"
                );
            }
        }
    }
}

#[test]
fn solve_writes_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(
        dir.path(),
        "g.json",
        &["--m", "2", "--n", "5", "--k", "2", "--seed", "8"],
    );
    let out_path = dir.path().join("report.json").display().to_string();
    let out = dopt(&[
        "solve",
        "--instance",
        &inst,
        "--scheme",
        "derand-proportional",
        "--out",
        &out_path,
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let report: Value = serde_json::from_str(&text).unwrap();
    assert!(report["design"]["ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_passes_and_detects_corruption() {
    let ok = dopt(&["verify", "--num-instances", "8", "--seed", "21"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let table = String::from_utf8_lossy(&ok.stdout);
    assert!(table.contains("8 instances x 10 checks = 80 results"));
    assert!(table.contains("all passing"));

    let bad = dopt(&["verify", "--num-instances", "4", "--seed", "21", "--h-bias", "0.001"]);
    assert_eq!(bad.status.code(), Some(1));
    let table = String::from_utf8_lossy(&bad.stdout);
    assert!(table.contains("FAILURES PRESENT"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let set_inst = generate(
        dir.path(),
        "set.json",
        &["--m", "2", "--n", "5", "--k", "2", "--seed", "1"],
    );
    // scheme/mode mismatch
    let out = dopt(&["solve", "--instance", &set_inst, "--scheme", "sample-repetitions"]);
    assert_eq!(out.status.code(), Some(2));
    // missing eps
    let out = dopt(&["solve", "--instance", &set_inst, "--scheme", "derand-asymptotic"]);
    assert_eq!(out.status.code(), Some(2));
    // infeasible budget ordering
    let bad = dir.path().join("bad.json").display().to_string();
    let out = dopt(&["generate", "--m", "3", "--n", "2", "--k", "2", "--out", &bad]);
    assert_eq!(out.status.code(), Some(2));
    // malformed instance file
    let mangled = dir.path().join("mangled.json");
    std::fs::write(&mangled, "{not json").unwrap();
    let out = dopt(&["solve", "--instance", mangled.to_str().unwrap(), "--scheme", "derand-proportional"]);
    assert_eq!(out.status.code(), Some(2));
}
