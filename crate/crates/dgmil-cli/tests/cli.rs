//! End-to-end tests of the `dgmil` binary: subcommand wiring, exit codes,
//! atomic outputs, config-file precedence, and byte-level reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dgmil::bundle::ModelBundle;
use dgmil::io::{read_feature_file, write_feature_file};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dgmil"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

/// Tiny synthetic pair shared by most tests.
fn generate_tiny(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
    let out = run(&[
        "generate",
        "--out-dir",
        dir.to_str().unwrap(),
        "--dim",
        "6",
        "--phenotypes",
        "2",
        "--neg-bags",
        "4",
        "--pos-bags",
        "4",
        "--bag-size",
        "20",
        "--witness-rate",
        "0.25",
        "--separation",
        "6",
        "--seed",
        &seed.to_string(),
        "--quiet",
    ]);
    assert_ok(&out);
    (dir.join("train.dgmf"), dir.join("test.dgmf"))
}

#[test]
fn generate_outputs_are_loadable_and_manifest_checksums_repeat() {
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    let (train, test) = generate_tiny(&dir_a, 5);
    generate_tiny(&dir_b, 5);

    // Feature files pass the full validation on read.
    let ds = read_feature_file(&train).unwrap();
    assert_eq!(ds.bags.len(), 8);
    read_feature_file(&test).unwrap();

    let manifest_a: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir_a.join("manifest.json")).unwrap()).unwrap();
    let manifest_b: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir_b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest_a["train"]["sha256"], manifest_b["train"]["sha256"]);
    assert_eq!(manifest_a["test"]["sha256"], manifest_b["test"]["sha256"]);
    assert_eq!(manifest_a["config"]["seed"], 5);
}

#[test]
fn zero_witness_rate_is_a_flag_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "generate",
        "--out-dir",
        tmp.path().to_str().unwrap(),
        "--witness-rate",
        "0",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("witness_rate"));
}

fn train_args<'a>(train: &'a str, out: &'a str, max_rounds: &'a str) -> Vec<&'a str> {
    vec![
        "train",
        "--train",
        train,
        "--out",
        out,
        "--clusters",
        "2",
        "--max-rounds",
        max_rounds,
        "--epochs",
        "40",
        "--seed",
        "9",
        "--quiet",
    ]
}

#[test]
fn max_rounds_zero_encodes_the_identity_composition() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, _) = generate_tiny(&tmp.path().join("data"), 1);
    let bundle_path = tmp.path().join("m0.json");
    let out = run(&train_args(
        train.to_str().unwrap(),
        bundle_path.to_str().unwrap(),
        "0",
    ));
    assert_ok(&out);
    let bundle = ModelBundle::load(&bundle_path).unwrap();
    assert!(bundle.projections.is_empty());
    assert_eq!(bundle.rounds_run, 0);
    // Zero training rounds, zero log records.
    let log = fs::read_to_string(tmp.path().join("m0.json.rounds.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 0);
}

#[test]
fn max_rounds_one_logs_exactly_one_round() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, _) = generate_tiny(&tmp.path().join("data"), 2);
    let bundle_path = tmp.path().join("m1.json");
    let out = run(&train_args(
        train.to_str().unwrap(),
        bundle_path.to_str().unwrap(),
        "1",
    ));
    assert_ok(&out);
    let log = fs::read_to_string(tmp.path().join("m1.json.rounds.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
    let record: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(record["round"], 1);
    assert!(record["final_loss"].as_f64().unwrap().is_finite());
}

#[test]
fn reproducible_reruns_are_byte_identical_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, test) = generate_tiny(&tmp.path().join("data"), 3);
    // Identical config means identical paths too; capture bytes between runs.
    let bundle = tmp.path().join("model.json");
    let report = tmp.path().join("report.json");
    let mut artifacts: Vec<(Vec<u8>, Vec<u8>, Vec<u8>)> = Vec::new();
    for _ in 0..2 {
        assert_ok(&run(&train_args(
            train.to_str().unwrap(),
            bundle.to_str().unwrap(),
            "2",
        )));
        assert_ok(&run(&[
            "eval",
            "--bundle",
            bundle.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--quiet",
        ]));
        artifacts.push((
            fs::read(&bundle).unwrap(),
            fs::read(tmp.path().join("model.json.rounds.jsonl")).unwrap(),
            fs::read(&report).unwrap(),
        ));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "bundles differ");
    assert_eq!(artifacts[0].1, artifacts[1].1, "round logs differ");
    assert_eq!(artifacts[0].2, artifacts[1].2, "reports differ");
}

#[test]
fn eval_on_training_file_matches_bundle_training_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, _) = generate_tiny(&tmp.path().join("data"), 4);
    let bundle_path = tmp.path().join("m.json");
    assert_ok(&run(&train_args(
        train.to_str().unwrap(),
        bundle_path.to_str().unwrap(),
        "2",
    )));
    let report_path = tmp.path().join("r.json");
    assert_ok(&run(&[
        "eval",
        "--bundle",
        bundle_path.to_str().unwrap(),
        "--test",
        train.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
        "--quiet",
    ]));
    let bundle = ModelBundle::load(&bundle_path).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(
        report["metrics"]["instance_auc"].as_f64(),
        bundle.train_instance_auc
    );
    assert_eq!(report["metrics"]["bag_auc"].as_f64(), bundle.train_bag_auc);
}

#[test]
fn unknown_instance_labels_yield_bag_metrics_only() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, test) = generate_tiny(&tmp.path().join("data"), 6);
    // Strip instance labels from the test file.
    let mut ds = read_feature_file(&test).unwrap();
    ds.instances.labels = vec![dgmil::data::InstanceLabel::Unknown; ds.instances.len()];
    let unlabeled = tmp.path().join("unlabeled.dgmf");
    write_feature_file(&ds.instances, &ds.bags, &unlabeled).unwrap();

    let bundle_path = tmp.path().join("m.json");
    assert_ok(&run(&train_args(
        train.to_str().unwrap(),
        bundle_path.to_str().unwrap(),
        "1",
    )));
    let report_path = tmp.path().join("r.json");
    let out = run(&[
        "eval",
        "--bundle",
        bundle_path.to_str().unwrap(),
        "--test",
        unlabeled.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
        "--quiet",
    ]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("instance labels"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report["metrics"]["instance_auc"].is_null());
    assert!(report["metrics"]["froc_score"].is_null());
    assert!(report["metrics"]["bag_auc"].is_number());
}

#[test]
fn dimension_mismatch_fails_without_writing_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, _) = generate_tiny(&tmp.path().join("data"), 7);
    // A second dataset with a different dimension.
    let other_dir = tmp.path().join("other");
    assert_ok(&run(&[
        "generate",
        "--out-dir",
        other_dir.to_str().unwrap(),
        "--dim",
        "9",
        "--phenotypes",
        "2",
        "--neg-bags",
        "2",
        "--pos-bags",
        "2",
        "--bag-size",
        "10",
        "--quiet",
    ]));
    let bundle_path = tmp.path().join("m.json");
    assert_ok(&run(&train_args(
        train.to_str().unwrap(),
        bundle_path.to_str().unwrap(),
        "1",
    )));
    let report_path = tmp.path().join("r.json");
    let out = run(&[
        "eval",
        "--bundle",
        bundle_path.to_str().unwrap(),
        "--test",
        other_dir.join("test.dgmf").to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(!report_path.exists(), "partial report must not be written");
}

#[test]
fn ablate_emits_one_row_per_value_in_grid_order_and_survives_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, test) = generate_tiny(&tmp.path().join("data"), 8);
    let csv_path = tmp.path().join("sweep.csv");
    let json_path = tmp.path().join("sweep.json");
    let out = run(&[
        "ablate",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--axis",
        "clusters",
        "--values",
        "2,9999,3",
        "--out-csv",
        csv_path.to_str().unwrap(),
        "--out-json",
        json_path.to_str().unwrap(),
        "--max-rounds",
        "1",
        "--epochs",
        "30",
        "--quiet",
    ]);
    assert_ok(&out);
    let csv = fs::read_to_string(&csv_path).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("clusters,2,"));
    assert!(rows[1].starts_with("clusters,9999,"));
    assert!(rows[2].starts_with("clusters,3,"));
    assert!(rows[1].contains(",error,"));
    assert!(rows[0].contains(",ok,"));
    assert!(rows[2].contains(",ok,"));

    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
    assert_eq!(doc["rows"][1]["status"], "error");
    assert!(doc["rows"][1]["error"]
        .as_str()
        .unwrap()
        .contains("9999 clusters"));
}

#[test]
fn empty_ablation_grid_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, test) = generate_tiny(&tmp.path().join("data"), 9);
    let out = run(&[
        "ablate",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--axis",
        "ratio",
        "--values",
        ", ,",
        "--out-csv",
        tmp.path().join("s.csv").to_str().unwrap(),
        "--out-json",
        tmp.path().join("s.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn config_file_values_apply_and_flags_override_them() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, _) = generate_tiny(&tmp.path().join("data"), 10);
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        "# training settings\nclusters=3\nmax-rounds=1\nepochs=25\nseed=11\n",
    )
    .unwrap();

    // File values apply.
    let bundle_a = tmp.path().join("a.json");
    assert_ok(&run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--train",
        train.to_str().unwrap(),
        "--out",
        bundle_a.to_str().unwrap(),
        "--quiet",
    ]));
    let a = ModelBundle::load(&bundle_a).unwrap();
    assert_eq!(a.config.clusters, 3);
    assert_eq!(a.config.max_rounds, 1);
    assert_eq!(a.config.train.max_epochs, 25);
    assert_eq!(a.config.seed, 11);

    // Explicit flags beat the file.
    let bundle_b = tmp.path().join("b.json");
    assert_ok(&run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--train",
        train.to_str().unwrap(),
        "--out",
        bundle_b.to_str().unwrap(),
        "--clusters",
        "2",
        "--quiet",
    ]));
    let b = ModelBundle::load(&bundle_b).unwrap();
    assert_eq!(b.config.clusters, 2);
    assert_eq!(b.config.max_rounds, 1);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, _) = generate_tiny(&tmp.path().join("data"), 12);
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "cluters=3\n").unwrap();
    let out = run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--train",
        train.to_str().unwrap(),
        "--out",
        tmp.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cluters"));
}

#[test]
fn fast_mode_matches_reproducible_output() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, test) = generate_tiny(&tmp.path().join("data"), 13);
    let mut reports = Vec::new();
    for mode in ["reproducible", "fast"] {
        let bundle = tmp.path().join(format!("{mode}.json"));
        let report = tmp.path().join(format!("{mode}-r.json"));
        let mut args = train_args(train.to_str().unwrap(), bundle.to_str().unwrap(), "2");
        args.extend_from_slice(&["--mode", mode]);
        assert_ok(&run(&args));
        assert_ok(&run(&[
            "eval",
            "--bundle",
            bundle.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--mode",
            mode,
            "--quiet",
        ]));
        let doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        reports.push(doc["metrics"]["bag_auc"].as_f64().unwrap());
    }
    assert!((reports[0] - reports[1]).abs() < 1e-6);
}

#[test]
fn inspect_summarizes_datasets_and_bundles() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, _) = generate_tiny(&tmp.path().join("data"), 14);
    let out = run(&["inspect", train.to_str().unwrap()]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("instances: 160"));
    assert!(text.contains("bags: 8 (4 positive, 4 negative)"));

    let bundle_path = tmp.path().join("m.json");
    assert_ok(&run(&train_args(
        train.to_str().unwrap(),
        bundle_path.to_str().unwrap(),
        "1",
    )));
    let out = run(&["inspect", bundle_path.to_str().unwrap()]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("model bundle"));
    assert!(text.contains("projections: 1"));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    let out = run(&["train", "--help"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn curves_csv_has_roc_and_froc_sections() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, test) = generate_tiny(&tmp.path().join("data"), 15);
    let bundle = tmp.path().join("m.json");
    assert_ok(&run(&train_args(
        train.to_str().unwrap(),
        bundle.to_str().unwrap(),
        "1",
    )));
    let report = tmp.path().join("r.json");
    let curves = tmp.path().join("curves.csv");
    assert_ok(&run(&[
        "eval",
        "--bundle",
        bundle.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--curves",
        curves.to_str().unwrap(),
        "--quiet",
    ]));
    let text = fs::read_to_string(&curves).unwrap();
    assert!(text.starts_with("curve,x,y,threshold\n"));
    assert!(text.lines().any(|l| l.starts_with("roc,")));
    assert!(text.lines().any(|l| l.starts_with("froc,")));
}
