use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qentangle::experiment::{read_records, RunRecord};

fn qentangle(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qentangle"));
    cmd.args(args).env("RUST_LOG", "warn");
    match seed_env {
        Some(s) => cmd.env("ENTANGLE_SEED", s),
        None => cmd.env_remove("ENTANGLE_SEED"),
    };
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, learning_rate: f64, extra: &str) -> String {
    let cfg = format!(
        r#"{{
  "version": 1,
  "synthetic": {{"samples_per_class": 30, "dim": 6, "separation": 3.0, "patients_per_class": 6, "seed": 1}},
  "pca_dim": 4,
  "n_q": 3,
  "train": {{"epochs": 2, "learning_rate": {learning_rate}}},
  "cells": [{{"mode": "constrained", "k": 1, "runs": 2}}, {{"mode": "semi_constrained", "k_max": 2, "runs": 2}}],
  "conventional": ["ring"],
  "ensemble_top_r": [50, 100],
  "output_dir": "out"{extra}
}}"#
    );
    let path = dir.join("experiment.json");
    fs::write(&path, cfg).unwrap();
    path.to_str().unwrap().to_string()
}

fn records(dir: &Path) -> Vec<RunRecord> {
    read_records(dir.join("out/records.jsonl"))
        .unwrap()
        .into_iter()
        .map(|r| RunRecord {
            wall_time: 0.0,
            ..r
        })
        .collect()
}

#[test]
fn sample_prints_summary_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = qentangle(
        &[
            "sample",
            "--n-q",
            "8",
            "--k",
            "2",
            "--seed",
            "4",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("mu=28.5714"));
    assert!(text.contains("E=16"));
    assert!(text.contains("row_counts=2,2,2,2,2,2,2,2"));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 8);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(json["mode"], "constrained");
    assert_eq!(json["k"], 2);
    assert_eq!(json["seed"], 4);

    let again = qentangle(&["sample", "--n-q", "8", "--k", "2"], Some("4"));
    assert!(stdout(&again).ends_with(&csv));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        code(&qentangle(&["sample", "--k", "2", "--k-max", "3"], None)),
        2
    );
    assert_eq!(
        code(&qentangle(&["sample", "--n-q", "8", "--k", "8"], None)),
        2
    );
    assert_eq!(code(&qentangle(&["topology", "--kind", "star"], None)), 2);
    assert_eq!(code(&qentangle(&["bogus"], None)), 2);
    assert_eq!(
        code(&qentangle(
            &["search", "--config", "/nonexistent.json"],
            None
        )),
        2
    );

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 0.01, ", \"typo\": 1");
    assert_eq!(code(&qentangle(&["search", "--config", &cfg], None)), 2);
    let cfg = write_config(dir.path(), 0.01, "");
    assert_eq!(
        code(&qentangle(&["search", "--config", &cfg], Some("abc"))),
        2
    );
}

#[test]
fn topology_output() {
    let o = qentangle(&["topology", "--kind", "ring", "--n-q", "8"], None);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("mu=14.2857"));
    let o = qentangle(&["topology", "--kind", "nn", "--n-q", "8"], None);
    assert!(stdout(&o).contains("mu=12.5000"));
}

#[test]
fn full_pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 0.01, ", \"master_seed\": 3");
    assert_eq!(
        code(&qentangle(
            &["search", "--config", &cfg, "--jobs", "2"],
            None
        )),
        0
    );
    let first = records(dir.path());
    assert_eq!(first.len(), 5);
    assert!(dir.path().join("out/checkpoints/c00-r000.json").exists());
    assert!(dir.path().join("out/baseline.json").exists());
    assert!(dir.path().join("out/pca.json").exists());

    assert_eq!(code(&qentangle(&["ensemble", "--config", &cfg], None)), 0);
    let ens: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/ensembles.json")).unwrap())
            .unwrap();
    assert_eq!(ens.as_array().unwrap().len(), 4);
    assert_eq!(code(&qentangle(&["report", "--config", &cfg], None)), 0);
    let report = fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    assert!(report.contains("Classical Baseline"));
    let topr = fs::read_to_string(dir.path().join("out/topr.csv")).unwrap();
    assert_eq!(topr.lines().next(), Some("cell,r,ensemble_acc"));
    assert_eq!(topr.lines().count(), 5);

    assert_eq!(
        code(&qentangle(
            &["search", "--config", &cfg, "--jobs", "1"],
            None
        )),
        0
    );
    assert_eq!(records(dir.path()), first);

    assert_eq!(
        code(&qentangle(&["search", "--config", &cfg], Some("4"))),
        0
    );
    let env_seeded = records(dir.path());
    assert_ne!(env_seeded, first);
    assert_eq!(
        code(&qentangle(
            &["search", "--config", &cfg, "--seed", "3"],
            Some("4")
        )),
        0
    );
    assert_eq!(records(dir.path()), first);
}

#[test]
fn train_single_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 0.01, "");
    let beta = dir.path().join("beta.csv");
    fs::write(&beta, "0,1,0\n0,0,1\n1,0,0\n").unwrap();
    let o = qentangle(
        &[
            "train",
            "--config",
            &cfg,
            "--beta",
            beta.to_str().unwrap(),
            "--seed",
            "5",
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"run_id\":\"train-s5\""));
    assert!(dir.path().join("out/checkpoints/train-s5.json").exists());

    fs::write(&beta, "1,1,0\n0,0,1\n1,0,0\n").unwrap();
    let o = qentangle(
        &["train", "--config", &cfg, "--beta", beta.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn training_failure_exits_3_and_empty_selection_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 1e308, "");
    let o = qentangle(&["search", "--config", &cfg], None);
    assert_eq!(code(&o), 3);
    let recs = records(dir.path());
    assert_eq!(recs.len(), 5);
    assert!(recs.iter().all(|r| !r.is_ok()));
    assert_eq!(code(&qentangle(&["ensemble", "--config", &cfg], None)), 4);
    assert_eq!(code(&qentangle(&["report", "--config", &cfg], None)), 0);
}

#[test]
fn unconstrained_sample_density() {
    let o = qentangle(
        &[
            "sample",
            "--n-q",
            "8",
            "--mode",
            "unconstrained",
            "--e",
            "8",
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("mu=14.2857"));
    let o = qentangle(&["sample", "--k", "9", "--n-q", "8"], None);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds n_q - 1"));
}
