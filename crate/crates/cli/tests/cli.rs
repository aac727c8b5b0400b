use std::f64::consts::PI;
use std::process::{Command as Process, Output as ProcessOutput};

use jct::{load_config, run, Command};
use serde_json::Value;

fn jct(args: &[&str]) -> ProcessOutput {
    Process::new(env!("CARGO_BIN_EXE_jct"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn error_record(out: &ProcessOutput) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().expect("stderr line")).expect("json record")
}

#[test]
fn classify_reports_third_order_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = jct(&[
        "classify",
        "--preset",
        "fig2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let record: Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    let columns = record["columns"].as_array().unwrap();
    let kind = columns.iter().position(|c| c == "kind").unwrap();
    assert_eq!(record["rows"][0][kind], "EP3");
    assert!(dir.path().join("fig2_classify.csv").exists());
}

#[test]
fn overrides_change_the_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = jct(&[
        "classify",
        "--preset",
        "fig2",
        "--set",
        "params.gamma=0.001",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("fig2_classify.csv")).unwrap();
    assert!(csv.contains("PTSymmetric"), "{csv}");
}

#[test]
fn json_mirror_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = jct(&[
        "surface",
        "--preset",
        "fig1b",
        "--json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fig1b_surface.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 50 * 50);
    assert!(doc["header"]["config-sha256"].is_string());
}

#[test]
fn missing_block_is_a_config_error() {
    let out = jct(&["quench", "--preset", "fig2"]);
    assert_eq!(out.status.code(), Some(2));
    let record = error_record(&out);
    assert_eq!(record["kind"], "config");
    assert_eq!(record["exit_code"], 2);
}

#[test]
fn bad_override_is_a_config_error() {
    let out = jct(&["classify", "--preset", "fig2", "--set", "params.delta=abc"]);
    assert_eq!(out.status.code(), Some(2));
    let out = jct(&["classify", "--preset", "fig2", "--set", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_preset_and_missing_file_fail() {
    let out = jct(&["classify", "--preset", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = jct(&["classify", "--config", "/nonexistent/run.toml"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(error_record(&out)["message"].is_string());
}

#[test]
fn config_file_round_trips_through_show_config() {
    let dir = tempfile::tempdir().unwrap();
    let shown = jct(&["show-config", "--preset", "fig4"]);
    assert!(shown.status.success());
    let path = dir.path().join("ladder.toml");
    std::fs::write(&path, &shown.stdout).unwrap();
    let again = jct(&["show-config", "--config", path.to_str().unwrap()]);
    assert_eq!(shown.stdout, again.stdout);
}

#[test]
fn presets_are_listed() {
    let out = jct(&["presets"]);
    let names: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(names.len(), 8);
    assert!(names.contains(&"fig5d".to_string()));
}

#[test]
fn surface_masks_missing_points_and_pins_the_ridge() {
    let cfg = load_config(None, Some("fig1b"), &[]).unwrap();
    let table = &run(Command::Surface, &cfg).unwrap()[0].table;
    let (g, j) = (
        table.numbers("g_ratio").unwrap(),
        table.numbers("j_ratio").unwrap(),
    );
    let (theta, mask) = (
        table.numbers("theta_3c").unwrap(),
        table.numbers("mask").unwrap(),
    );
    let mut masked = 0;
    for n in 0..g.len() {
        if mask[n] == 1.0 {
            masked += 1;
            assert!(theta[n].is_nan());
        } else {
            assert!((0.0..=PI / 3.0).contains(&theta[n]));
        }
        if (g[n] - 1.0).abs() < 1e-12 {
            assert!((theta[n] - PI / 6.0).abs() < 1e-12);
        }
    }
    assert!(masked > 0 && masked < g.len());
    assert!(j.iter().all(|v| (0.04 - 1e-12..=2.0 + 1e-12).contains(v)));
}

#[test]
fn equal_branches_echo_identically() {
    let cfg = load_config(None, Some("fig5a"), &[]).unwrap();
    let table = &run(Command::Quench, &cfg).unwrap()[0].table;
    let (l1, l2) = (table.numbers("L1").unwrap(), table.numbers("L2").unwrap());
    assert!(l1.iter().zip(&l2).all(|(a, b)| (a - b).abs() < 1e-10));
    // complex post-quench levels have no single revival period
    assert!(!table.header.iter().any(|(k, _)| k == "gap period"));

    let cfg = load_config(None, Some("fig5c"), &[]).unwrap();
    let table = &run(Command::Quench, &cfg).unwrap()[0].table;
    assert!(table.header.iter().any(|(k, _)| k == "gap period"));
}
