//! End-to-end checks of the runner: determinism, exit codes, config errors.

use cpnym_cli::{emit_report, run_suite, Format, SuiteConfig, SuiteId};
use std::io::Write;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cpnym"))
}

#[test]
fn default_quick_run_passes_and_exits_zero() {
    let out = bin().args(["all", "--quick"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("summary:"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn reports_are_byte_identical_for_fixed_seed() {
    let mut cfg = SuiteConfig::default();
    cfg.quick = true;
    cfg.suites = vec![SuiteId::Geometry, SuiteId::Killing, SuiteId::Variation];
    let a = emit_report(&cfg, &run_suite(&cfg), Format::Json, false);
    let b = emit_report(&cfg, &run_suite(&cfg), Format::Json, false);
    assert_eq!(a, b);
    let t1 = emit_report(&cfg, &run_suite(&cfg), Format::Text, false);
    let t2 = emit_report(&cfg, &run_suite(&cfg), Format::Text, false);
    assert_eq!(t1, t2);
}

#[test]
fn different_seeds_change_the_sampled_values() {
    let mut a = SuiteConfig::default();
    a.quick = true;
    a.suites = vec![SuiteId::Geometry];
    let mut b = a.clone();
    b.seed = a.seed + 1;
    let ra = run_suite(&a);
    let rb = run_suite(&b);
    // same check set, at least one sampled residual differs
    assert_eq!(ra.len(), rb.len());
    assert!(ra
        .iter()
        .zip(&rb)
        .any(|(x, y)| x.computed != y.computed));
}

#[test]
fn json_report_has_config_echo_and_summary() {
    let mut cfg = SuiteConfig::default();
    cfg.quick = true;
    cfg.suites = vec![SuiteId::Killing];
    let results = run_suite(&cfg);
    let json = emit_report(&cfg, &results, Format::Json, false);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["config"]["n"], 1);
    assert_eq!(v["summary"]["total"], results.len());
    assert_eq!(v["summary"]["failed"], 0);
    assert!(v["checks"][0]["tag"].is_string());
    // no timing fields by default
    assert!(v["checks"][0].get("wall_time_ms").is_none());
}

#[test]
fn empty_result_list_summary() {
    let mut cfg = SuiteConfig::default();
    cfg.suites = vec![];
    let json = emit_report(&cfg, &run_suite(&cfg), Format::Json, false);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["summary"]["total"], 0);
    assert_eq!(v["summary"]["passed"], 0);
}

#[test]
fn malformed_config_names_the_field_and_exits_two() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "resolutoin = 64").unwrap();
    let out = bin()
        .args(["all", "--config", f.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("resolutoin"), "{err}");
}

#[test]
fn gap_at_n1_is_a_usage_error() {
    let out = bin().args(["gap"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n >= 2"));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = bin().args(["verify-everything"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gap_suite_at_n2_reports_the_known_failing_bound() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "n = 2\nr = 3\nquick = true").unwrap();
    let out = bin()
        .args([
            "gap",
            "--config",
            f.path().to_str().unwrap(),
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    // the -3 bound is violated at a finite rate by design of the check
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("json report on stdout");
    let checks = v["checks"].as_array().unwrap();
    let failing: Vec<&str> = checks
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert_eq!(failing, vec!["gap.r2r-bound"], "{v}");
    // everything else in the suite holds
    assert!(checks.len() >= 8);
}

#[test]
fn timings_flag_adds_wall_times() {
    let mut cfg = SuiteConfig::default();
    cfg.quick = true;
    cfg.suites = vec![SuiteId::Killing];
    let json = emit_report(&cfg, &run_suite(&cfg), Format::Json, true);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(v["checks"][0]["wall_time_ms"].is_number());
}

#[test]
fn tolerance_override_applies() {
    let mut cfg = SuiteConfig::default();
    cfg.quick = true;
    cfg.suites = vec![SuiteId::Geometry];
    cfg.tolerance_overrides
        .insert("geometry.j-isometry".into(), 1e-30);
    let results = run_suite(&cfg);
    let check = results
        .iter()
        .find(|c| c.id == "geometry.j-isometry")
        .unwrap();
    assert_eq!(check.tolerance, 1e-30);
}
