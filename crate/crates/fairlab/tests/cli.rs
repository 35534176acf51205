//! End-to-end tests of the fairlab binary.

use std::fs;
use std::path::Path;
use std::process::Command;

fn fairlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairlab"))
}

fn small_config(dir: &Path, extra_train: &str, extra_exp: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
  "dataset": {{"synthetic": {{"n": 800, "dims": 4, "seed": 3}}}},
  "train": {{"hidden_sizes": [8], "batch_size": 32, "epochs": 6,
             "record_window": [3, 6], "learning_rate": 0.02{extra_train}}},
  "experiment": {{"n_runs": 3, "b_values": [0, 2], "t_max": 3, "s_max": 2,
                  "repeats": 1, "passes": 20, "n_checkpoints": 6, "pool_runs": 2{extra_exp}}},
  "master_seed": 5
}}"#
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn train_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path(), "", "");
    let run = |out: &Path| {
        let status = fairlab()
            .args(["train", "--runs", "2", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let out = tmp.path().join("out");
    run(&out);
    let first = fs::read(out.join("trajectory_0.csv")).unwrap();
    let first_report = fs::read(out.join("report.json")).unwrap();
    run(&out);
    assert_eq!(first, fs::read(out.join("trajectory_0.csv")).unwrap());
    assert_eq!(first_report, fs::read(out.join("report.json")).unwrap());
    let header = String::from_utf8(first).unwrap();
    assert!(header
        .starts_with("epoch,f1,avg_odds,eopp,dp,acc,acc_a0y1,acc_a0y0,acc_a1y1,acc_a1y0\n"));
}

#[test]
fn metrics_on_perfect_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("preds.csv");
    fs::write(&csv, "pred,label,sensitive\n1,1,0\n0,0,0\n1,1,1\n0,0,1\n").unwrap();
    let out = tmp.path().join("out");
    let output = fairlab()
        .args(["metrics", "--input"])
        .arg(&csv)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("f1 = 100.000000"), "stdout: {stdout}");
    assert!(stdout.contains("avg_odds = 0.000000"), "stdout: {stdout}");
    let table = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(table.lines().nth(1).unwrap().starts_with("100.000000,0.000000,"));
}

#[test]
fn decouple_fixed_reshuffle_zero_lr_gives_identical_flat_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("zero_lr.json");
    fs::write(
        &config,
        r#"{
  "dataset": {"synthetic": {"n": 800, "dims": 4, "seed": 3}},
  "train": {"hidden_sizes": [8], "batch_size": 32, "epochs": 6,
            "record_window": [3, 6], "learning_rate": 0.0},
  "master_seed": 5
}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let status = fairlab()
        .args(["decouple", "--mode", "fixed-reshuffle", "--runs", "2", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let t0 = fs::read_to_string(out.join("trajectory_0.csv")).unwrap();
    let t1 = fs::read_to_string(out.join("trajectory_1.csv")).unwrap();
    // same weights throughout (lr 0, same init epoch after epoch): every run
    // and every epoch reports the same metrics
    let rows: Vec<&str> = t0.lines().skip(1).collect();
    for row in &rows {
        let tail = row.split_once(',').unwrap().1;
        let first_tail = rows[0].split_once(',').unwrap().1;
        assert_eq!(tail, first_tail, "flat trajectory expected");
    }
    // note: runs differ in weight_seed, so trajectories are flat but need not
    // match across runs; with lr=0 each run just repeats its own init metrics
    assert_eq!(t0.lines().count(), t1.lines().count());

    // with the weight init pinned instead, lr=0 makes the runs fully identical
    let out2 = out.parent().unwrap().join("out2");
    let status = fairlab()
        .args(["decouple", "--mode", "fixed-weight-init", "--runs", "2", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out2)
        .status()
        .unwrap();
    assert!(status.success());
    let p0 = fs::read_to_string(out2.join("trajectory_0.csv")).unwrap();
    let p1 = fs::read_to_string(out2.join("trajectory_1.csv")).unwrap();
    assert_eq!(p0, p1);
}

#[test]
fn unknown_config_keys_and_bad_values_exit_1_listing_all() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.json");
    fs::write(
        &config,
        r#"{"train": {"batch_size": 0, "dropout_rate": 2.0, "record_window": [5, 2], "epochs": 6}}"#,
    )
    .unwrap();
    let output = fairlab()
        .args(["train", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("batch_size"), "stderr: {stderr}");
    assert!(stderr.contains("dropout_rate"), "stderr: {stderr}");
    assert!(stderr.contains("record_window"), "stderr: {stderr}");

    let unknown = tmp.path().join("unknown.json");
    fs::write(&unknown, r#"{"no_such_key": 1}"#).unwrap();
    let output = fairlab()
        .args(["train", "--config"])
        .arg(&unknown)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8(output.stderr).unwrap().contains("no_such_key"));
}

#[test]
fn generate_roundtrips_through_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path(), "", "");
    let out = tmp.path().join("out");
    let status = fairlab()
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let data = fs::read_to_string(out.join("data.csv")).unwrap();
    assert_eq!(data.lines().count(), 801);
    assert!(data.starts_with("x0,x1,x2,x3,label,sensitive\n"));
}
