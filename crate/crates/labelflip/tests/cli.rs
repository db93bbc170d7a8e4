//! End-to-end tests of the `labelflip` binary: exit codes, output files,
//! and manifest-driven reproducibility.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_labelflip"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn small_config(out_dir: &Path, budgets: &str) -> String {
    format!(
        r#"{{
  "dataset": {{"kind": "synthetic_linear", "n": 120, "noise": 1.0}},
  "train_fraction": 0.5,
  "budgets": {budgets},
  "t_max": 2,
  "classifier": {{"max_iterations": 60, "gbdt": {{"num_trees": 8, "max_depth": 3, "learning_rate": 0.1, "lambda": 1.0, "min_split_gain": 0.0, "min_child_weight": 0.001}}}},
  "output_dir": "{}"
}}"#,
        out_dir.display()
    )
}

fn read_dir_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        files.insert(
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    files
}

fn run_ok(args: &[&str]) -> Output {
    let output = binary().args(args).output().unwrap();
    assert!(
        output.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

#[test]
fn attack_budget_zero_exits_zero_with_identical_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &small_config(&out, "[0.0]"));
    run_ok(&["attack", "--config", config.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out.join("poisoned_labels.csv")).unwrap();
    assert!(csv.starts_with("index,original,poisoned\n"));
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], fields[2]);
    }
}

#[test]
fn attack_report_json_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &small_config(&out, "[0.3]"));
    run_ok(&["attack", "--config", config.to_str().unwrap()]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("attack_result.json")).unwrap())
            .unwrap();
    assert_eq!(report["strategy"], "ogds");
    assert!(report["budget"].is_u64());
    assert!(report["flipped_indices"].is_array());
    assert!(report["t_f"].is_u64());
    let val_errors = report["val_errors"].as_array().unwrap();
    assert!(
        !val_errors.is_empty() && val_errors.len() <= 2,
        "t_max was 2"
    );
    assert!(report["count_large"].is_u64());
    assert!(report["count_small"].is_u64());
}

#[test]
fn jobs_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("serial");
    let out2 = dir.path().join("parallel");
    let config = write_config(dir.path(), &small_config(&out1, "[0.0, 0.1, 0.2]"));
    run_ok(&["sweep", "--config", config.to_str().unwrap(), "--jobs", "1"]);
    run_ok(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
        "--jobs",
        "4",
    ]);
    let a = std::fs::read_to_string(out1.join("sweep.csv")).unwrap();
    let b = std::fs::read_to_string(out2.join("sweep.csv")).unwrap();
    assert_eq!(a, b, "cell scheduling must not affect results");
}

#[test]
fn csv_dataset_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x1,x2,verdict\n");
    for i in 0..80 {
        let side = if i % 2 == 0 { 1.0 } else { -1.0 };
        let x1 = side * 2.0 + (i as f64 % 7.0) / 10.0;
        let x2 = (i as f64 % 5.0) / 10.0 - side;
        csv.push_str(&format!(
            "{x1},{x2},{}\n",
            if side > 0.0 { "bad" } else { "good" }
        ));
    }
    let data_path = dir.path().join("verdicts.csv");
    std::fs::write(&data_path, csv).unwrap();

    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{
  "dataset": {{"kind": "csv", "path": "{}", "label_column": "verdict", "positive_value": "bad"}},
  "train_fraction": 0.5,
  "budgets": [0.2],
  "t_max": 2,
  "classifier": {{"max_iterations": 60, "gbdt": {{"num_trees": 8, "max_depth": 3, "learning_rate": 0.1, "lambda": 1.0, "min_split_gain": 0.0, "min_child_weight": 0.001}}}},
  "output_dir": "{}"
}}"#,
            data_path.display(),
            out.display()
        ),
    );
    run_ok(&["attack", "--config", config.to_str().unwrap()]);
    let labels = std::fs::read_to_string(out.join("poisoned_labels.csv")).unwrap();
    assert_eq!(
        labels.lines().count(),
        1 + 40,
        "header plus one row per train instance"
    );
    let flipped = labels
        .lines()
        .skip(1)
        .filter(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            fields[1] != fields[2]
        })
        .count();
    assert!(
        flipped > 0 && flipped <= 8,
        "20% of 40 caps flips at 8, got {flipped}"
    );
}

#[test]
fn missing_dataset_file_exits_one_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"dataset": {"kind": "csv", "path": "/nonexistent/banknote.csv", "label_column": "class", "positive_value": "1"}}"#,
    );
    let output = binary()
        .args(["attack", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("/nonexistent/banknote.csv"),
        "stderr must name the missing path: {stderr}"
    );
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"budgets": [0.3, 0.1]}"#);
    let output = binary()
        .args(["sweep", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn unknown_flag_exits_one_and_help_exits_zero() {
    let output = binary().args(["sweep", "--frobnicate"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let output = binary().args(["--help"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn gradients_command_writes_one_row_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut body = small_config(&out, "[0.0]");
    body = body.replace("\"n\": 120", "\"n\": 10");
    let config = write_config(dir.path(), &body);
    run_ok(&["gradients", "--config", config.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out.join("gradients.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11, "header plus 10 rows");
    let mut ranks: Vec<usize> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    ranks.sort_unstable();
    assert_eq!(ranks, (1..=10).collect::<Vec<_>>());
}

#[test]
fn sweep_reruns_from_manifest_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("run1");
    let config = write_config(dir.path(), &small_config(&out1, "[0.0, 0.1]"));
    run_ok(&["sweep", "--config", config.to_str().unwrap()]);
    let first = read_dir_files(&out1);

    let out2 = dir.path().join("run2");
    let manifest = out1.join("manifest.json");
    run_ok(&[
        "sweep",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    let mut second = read_dir_files(&out2);

    // The manifests differ only in output_dir; all report files match.
    second.remove("manifest.json");
    for (name, content) in second {
        assert_eq!(
            content, first[&name],
            "file {name} must be byte-identical across manifest reruns"
        );
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    let config = write_config(dir.path(), &small_config(&out1, "[0.1]"));
    run_ok(&[
        "attack",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    run_ok(&[
        "attack",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "2",
        "--out",
        out2.to_str().unwrap(),
    ]);
    let a = std::fs::read_to_string(out1.join("poisoned_labels.csv")).unwrap();
    let b = std::fs::read_to_string(out2.join("poisoned_labels.csv")).unwrap();
    assert_ne!(a, b, "different seeds should pick different flips");
}
