use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use acmag::scenario::{evaluate, format_number, ScenarioConfig};

fn acmag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acmag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn reports_invalid_config_as_json_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(
        &cfg,
        "[field]\nf_ac_hz = 0.0\n[sequence]\npi_width_s = -1.0\n",
    )
    .unwrap();
    let out = acmag(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "invalid-config");
    let paths: Vec<&str> = err["issues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["path"].as_str().unwrap())
        .collect();
    assert!(paths.contains(&"field.f_ac_hz"), "{paths:?}");
    assert!(paths.contains(&"sequence.pi_width_s"), "{paths:?}");
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn rejects_unknown_scenario_and_keys() {
    let out = acmag(&["--scenario", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("nope"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    fs::write(&cfg, "[sweep]\nvalue = [1.0]\n").unwrap();
    let out = acmag(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");

    let out = acmag(&[
        "--config",
        dir.path().join("missing.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn manifest_records_resolved_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "scenario = \"phase-deviation-sweep\"\nseed = 3\n[sweep]\ndphi_rad = [0.1]\nvalues = [15e-6, 19e-6, 23e-6]\n[mc]\nn_trials = 4\nn_measurements = 1000\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = acmag(&[
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "18446744073709551615",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let status: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(status["status"], "ok");

    let manifest = read_json(&out_dir.join("manifest.json"));
    for key in [
        "tool", "version", "scenario", "seed", "config", "derived", "curves", "files",
    ] {
        assert!(manifest.get(key).is_some(), "missing {key}");
    }
    assert_eq!(manifest["scenario"], "phase-deviation-sweep");
    assert_eq!(manifest["seed"].as_u64(), Some(u64::MAX));
    assert_eq!(manifest["config"]["seed"].as_u64(), Some(u64::MAX));
    assert_eq!(manifest["files"][0], "phase_deviation_p0.032pi.csv");
    for key in ["alpha", "contrast", "delta_phi_limit", "eta_phi"] {
        assert!(manifest["derived"][key].is_number(), "derived.{key}");
    }
}

#[test]
fn csv_rows_rederive_from_manifest_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = acmag(&[
        "--scenario",
        "slope-vs-B",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let manifest = read_json(&dir.path().join("manifest.json"));
    let config: ScenarioConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    let again = evaluate(&config).unwrap();
    assert_eq!(
        again.tables.len(),
        manifest["curves"].as_array().unwrap().len()
    );
    for table in &again.tables {
        let text = fs::read_to_string(dir.path().join(&table.file)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), table.header.join(","));
        for (line, row) in lines.zip(&table.rows) {
            let parsed: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(&parsed, row, "{}", table.file);
            let formatted: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            assert_eq!(line, formatted.join(","));
        }
    }
}

#[test]
fn help_lists_scenarios() {
    let out = acmag(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("mc-validate") && text.contains("--threads"));
}
