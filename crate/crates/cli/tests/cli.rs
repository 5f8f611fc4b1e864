use std::path::Path;
use std::process::{Command, Output};

fn gcn_kfac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcn-kfac")).args(args).output().expect("binary runs")
}

fn synth(dir: &Path) {
    let out = gcn_kfac(&[
        "synth", "--out", dir.to_str().unwrap(), "--nodes", "120", "--features", "30",
        "--val", "30", "--test", "40", "--name", "tiny",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_then_train_writes_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("tiny");
    let runs = tmp.path().join("runs");
    synth(&data);
    let out = gcn_kfac(&[
        "train", "--dataset", data.to_str().unwrap(), "--split", "2", "--optimizer", "sgd",
        "--kfac", "gamma", "--epsilon", "100", "--update-every", "5", "--epochs", "12",
        "--hidden", "8", "--seeds", "3,7", "--out", runs.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("SGD-KFAC_gamma on tiny (split 2), 2 run(s)"), "{stdout}");

    for seed in [3, 7] {
        let csv = std::fs::read_to_string(runs.join(format!("run_{seed}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("epoch,train_cost,val_cost,elapsed_ms"));
        assert_eq!(lines.count(), 12);
    }
    let curves = std::fs::read_to_string(runs.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 2 * 12 * 2);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(runs.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "SGD-KFAC_gamma");
    assert_eq!(report["runs"], 2);
    assert_eq!(report["seeds"], serde_json::json!([3, 7]));
    assert!(report["test_accuracy"]["half_width"].is_number());
    assert_eq!(report["config"]["kfac"]["update_every"], 5);
}

#[test]
fn missing_dataset_fails_with_one_line() {
    let out = gcn_kfac(&["train", "--dataset", "/nonexistent/bundle", "--epochs", "1", "--seeds", "0"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error: ") && stderr.contains("/nonexistent/bundle"), "{stderr}");
}

#[test]
fn invalid_arguments_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path());
    let dataset = tmp.path().to_str().unwrap();
    for args in [
        vec!["train", "--dataset", dataset, "--split", "4"],
        vec!["train", "--dataset", dataset, "--kfac", "sometimes"],
        vec!["train", "--dataset", dataset, "--epochs", "0"],
        vec!["train", "--dataset", dataset, "--dropout", "1.5", "--epochs", "1"],
    ] {
        let out = gcn_kfac(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}
