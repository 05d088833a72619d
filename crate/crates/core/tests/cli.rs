//! The command-line binary, driven end to end on small synthetic inputs.

use std::path::Path;
use std::process::{Command, Output};

fn mvpot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvpot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn simulate_two_block(dir: &Path, n: &str) -> String {
    let input = dir.join("two_block.csv");
    let out = mvpot(&[
        "simulate",
        "--preset",
        "two-block",
        "--n",
        n,
        "--seed",
        "3",
        "--out",
        input.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    input.to_str().unwrap().to_string()
}

#[test]
fn attribute_writes_identical_bundles_for_one_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_two_block(dir.path(), "400");
    // the manifest records output paths, so both runs share one directory
    let out_dir = dir.path().join("out");
    let run = || {
        let out = mvpot(&[
            "attribute",
            "--input",
            &input,
            "--out",
            out_dir.to_str().unwrap(),
            "--K",
            "2",
            "--bootstrap-B",
            "100",
            "--weights-mode",
            "equal",
            "--curve-points",
            "5",
            "--seed",
            "8",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.starts_with("cluster\tstatus"));
        (
            std::fs::read(out_dir.join("results.json")).unwrap(),
            std::fs::read(out_dir.join("results.csv")).unwrap(),
            std::fs::read(out_dir.join("curves").join("cluster_000.csv")).unwrap(),
        )
    };
    let first = run();
    assert_eq!(first, run());
}

#[test]
fn attribute_without_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_two_block(dir.path(), "100");
    let out = mvpot(&[
        "attribute",
        "--input",
        &input,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn missing_input_is_an_input_error() {
    let out = mvpot(&["cluster", "--input", "/nonexistent/x.csv", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_value_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_two_block(dir.path(), "100");
    let out = mvpot(&["cluster", "--input", &input, "--seed", "1", "--threshold-quantile", "1.5"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_file_fields_match_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_two_block(dir.path(), "200");
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"K": 2, "chi_quantile": 0.9, "seed": 5}"#).unwrap();
    let from_file = mvpot(&["cluster", "--input", &input, "--config", cfg.to_str().unwrap()]);
    let from_flags = mvpot(&[
        "cluster",
        "--input",
        &input,
        "--K",
        "2",
        "--chi-quantile",
        "0.9",
        "--seed",
        "5",
    ]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert_eq!(from_file.stdout, from_flags.stdout);

    let json: serde_json::Value = serde_json::from_slice(&from_file.stdout).unwrap();
    let labels = json["assignment"]["labels"].as_array().unwrap();
    assert_eq!(labels.len(), 8);
    // the two blocks of four sites separate
    assert!(labels[..4].iter().all(|l| *l == labels[0]));
    assert!(labels[4..].iter().all(|l| *l == labels[4]));
    assert_ne!(labels[0], labels[4]);
}

#[test]
fn fit_reports_every_site() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_two_block(dir.path(), "300");
    let out = mvpot(&["fit", "--input", &input, "--world", "1", "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["sites"].as_array().unwrap().len(), 8);
}

#[test]
fn reproduce_prints_comparison_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = mvpot(&["reproduce", "fig3", "--seed", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("## comparison"));
    assert!(!stdout.contains("[FAIL]"));
    let written: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert!(written.iter().all(|f| f.to_string_lossy().starts_with("fig3_")));
    assert!(!written.is_empty());
}

#[test]
fn reproduce_rejects_unknown_experiment() {
    let out = mvpot(&["reproduce", "fig9", "--seed", "1"]);
    assert!(!out.status.success());
}

#[test]
fn simulate_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let out = mvpot(&[
            "simulate",
            "--preset",
            "fig6",
            "--n",
            "50",
            "--seed",
            "2",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}
