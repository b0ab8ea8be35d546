use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dkp-verify"))
        .args(args)
        .output()
        .expect("spawn cli")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn empty_suite_list_is_config_error() {
    let out = cli(&["--scenario", "default-n2", "--suites", ""]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_suite_is_config_error() {
    let out = cli(&["--suites", "identities,nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn unknown_scenario_and_bad_tolerance() {
    assert_eq!(cli(&["--scenario", "default-n9"]).status.code(), Some(2));
    assert_eq!(
        cli(&["--suites", "identities", "--tol", "identities=-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        cli(&["--suites", "identities", "--tol", "identities"]).status.code(),
        Some(2)
    );
}

#[test]
fn tolerance_override_flips_exit_status() {
    let out = cli(&["--suites", "identities", "--tau", "1.0", "--tol", "identities=1e-40"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identity_reports_are_deterministic_and_valid() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = cli(&[
            "--suites",
            "identities",
            "--tau",
            "1.2",
            "--seed",
            "7",
            "--format",
            "both",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let ja = read(a.path(), "identities.json");
    assert_eq!(ja, read(b.path(), "identities.json"));
    assert_eq!(read(a.path(), "identities.csv"), read(b.path(), "identities.csv"));
    let v: serde_json::Value = serde_json::from_str(&ja).unwrap();
    let first = &v.as_array().unwrap()[0];
    for key in [
        "identity_name",
        "tau",
        "samples",
        "max_residual",
        "rms_residual",
        "tolerance",
        "pass",
    ] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert_eq!(first["tau"], 1.2);
    let summary: serde_json::Value = serde_json::from_str(&read(a.path(), "summary.json")).unwrap();
    assert_eq!(summary["pass"], true);
}

#[test]
fn config_file_with_field_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.json");
    std::fs::write(
        &cfg,
        r#"{"name":"small","N":2,"tau0":1.0,"xi0":[0.2,0.6],"v0":[0.12,0.08],
            "driving":{"d":[{"linear":[0.0,0.5]},{"constant":0.0}],"w":[{"constant":0.0},{"constant":0.0}]},
            "u0_coeffs":[0.1],"z_samples":[[4,0],[6,0],[10,0]],
            "grid":{"spacing":0.02,"extent":3},"step":0.001}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = cli(&[
        "--config",
        cfg.to_str().unwrap(),
        "--suites",
        "gt",
        "--format",
        "csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = read(&out_dir, "field.csv");
    assert!(csv.lines().count() > 9);
    assert!(!out_dir.join("field.json").exists());
    assert!(read(&out_dir, "summary.json").contains("\"small\""));
}

#[test]
fn malformed_config_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"N\": 2}").unwrap();
    assert_eq!(cli(&["--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}
