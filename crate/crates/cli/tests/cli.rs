use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_riskscore"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn riskscore")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_data(dir: &Path) -> PathBuf {
    let path = dir.join("data.csv");
    let mut text = String::from("a,b,label\n");
    for i in 0..60u32 {
        let a = i % 3;
        let b = (i / 3) % 2;
        let y = u32::from((a + b + i % 5) >= 4);
        text.push_str(&format!("{a},{b},{y}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

fn train_model(dir: &Path, data: &Path) -> PathBuf {
    let model = dir.join("model.json");
    let out = run(&[
        "train", "--data", s(data), "--out", s(&model), "--method", "exact",
        "--lambda-min", "-2", "--lambda-max", "2", "--thresholds", "0.25,0.5,0.75",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    model
}

#[test]
fn train_predict_eval_roundtrip() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path());
    let model = train_model(dir.path(), &data);
    let summary: serde_json::Value =
        serde_json::from_slice(&run(&["train", "--data", s(&data), "--out", s(&model), "--method", "exact",
            "--lambda-min", "-2", "--lambda-max", "2", "--thresholds", "0.25,0.5,0.75"]).stdout).unwrap();
    assert_eq!(summary["evaluations"], 25);

    let preds = dir.path().join("preds.csv");
    let out = run(&["predict", "--model", s(&model), "--data", s(&data), "--label-col", "label", "--out", s(&preds)]);
    assert!(out.status.success());
    let text = fs::read_to_string(&preds).unwrap();
    assert!(text.starts_with("score,prediction,label\n"));
    assert_eq!(text.lines().count(), 61);

    let nnz = summary["model_size"].to_string();
    let out = run(&[
        "eval", "--predictions", s(&preds), "--thresholds", "0.25,0.5,0.75", "--c0", "0.001", "--nnz", &nnz,
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let objective = report["objective"].as_f64().unwrap();
    let loss = summary["loss"].as_f64().unwrap();
    assert!((objective - loss).abs() < 1e-12, "{objective} vs {loss}");
    assert!(report["auroc"].as_f64().unwrap() >= 0.5);
}

#[test]
fn predict_without_labels() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path());
    let model = train_model(dir.path(), &data);
    let unlabeled = dir.path().join("new.csv");
    fs::write(&unlabeled, "a,b\n0,0\n2,1\n").unwrap();
    let out = run(&["predict", "--model", s(&model), "--data", s(&unlabeled)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("score,prediction\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn bounds_csv_is_ordered() {
    let out = run(&["bounds", "--prevalence", "0.3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("auroc,aunbc_upper,aunbc_lower"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[2] <= v[1] + 1e-12, "{line}");
    }
}

#[test]
fn synth_then_calibrate_does_not_lower_aunbc() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path());
    let preds = dir.path().join("synth.csv");
    let out = run(&["synth", "--labels", s(&data), "--type", "1", "--r", "0.4", "--seed", "3", "--out", s(&preds)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let repaired = dir.path().join("rep.csv");
    let report = dir.path().join("rep.json");
    let out = run(&["calibrate", "--predictions", s(&preds), "--out", s(&repaired), "--report", s(&report)]);
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert!(r["aunbc_after"].as_f64().unwrap() >= r["aunbc_before"].as_f64().unwrap());
}

#[test]
fn synth_is_seeded() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path());
    let a = run(&["synth", "--labels", s(&data), "--type", "1", "--r", "0.2", "--seed", "9"]);
    let b = run(&["synth", "--labels", s(&data), "--type", "1", "--r", "0.2", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn dca_writes_three_files() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path());
    let preds = dir.path().join("synth.csv");
    assert!(run(&["synth", "--labels", s(&data), "--type", "2", "--auroc", "0.8", "--out", s(&preds)]).status.success());
    let out_dir = dir.path().join("curves");
    assert!(run(&["dca", "--predictions", s(&preds), "--out-dir", s(&out_dir)]).status.success());
    for f in ["roc.csv", "calibration.csv", "decision.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let decision = fs::read_to_string(out_dir.join("decision.csv")).unwrap();
    assert!(decision.starts_with("threshold,model,treat_all,treat_none\n"));
}

#[test]
fn cv_and_scorecard_and_milp() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path());
    let report = dir.path().join("cv.json");
    let oof = dir.path().join("oof.csv");
    let out = run(&[
        "cv", "--data", s(&data), "--folds", "3", "--sa-alpha", "1e-5", "--lambda-min", "-1", "--lambda-max", "1",
        "--out", s(&report), "--oof-out", s(&oof),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["report"]["folds"].as_array().unwrap().len(), 3);
    assert_eq!(fs::read_to_string(&oof).unwrap().lines().count(), 61);

    let model = train_model(dir.path(), &data);
    let out = run(&["scorecard", "--model", s(&model)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Total possible score"));
    assert!(text.contains("Predicted risk"));

    let lp = dir.path().join("m.lp");
    let out = run(&["export-milp", "--data", s(&data), "--lambda-min", "-2", "--lambda-max", "2", "--out", s(&lp)]);
    assert!(out.status.success());
    let text = fs::read_to_string(lp).unwrap();
    assert!(text.contains("Minimize") && text.contains("Subject To") && text.trim_end().ends_with("End"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path());
    let model = dir.path().join("m.json");
    let bad_grid = run(&["train", "--data", s(&data), "--out", s(&model), "--thresholds", "0.5,0.2"]);
    assert_eq!(bad_grid.status.code(), Some(2));
    let bad_bounds = run(&["train", "--data", s(&data), "--out", s(&model), "--lambda-min", "3", "--lambda-max", "1"]);
    assert_eq!(bad_bounds.status.code(), Some(2));
    let bad_flag = run(&["train", "--nope"]);
    assert_eq!(bad_flag.status.code(), Some(2));

    let missing = run(&["train", "--data", s(&dir.path().join("missing.csv")), "--out", s(&model)]);
    assert_eq!(missing.status.code(), Some(1));
    let labels = dir.path().join("bad.csv");
    fs::write(&labels, "a,label\n1,1\n0,2\n").unwrap();
    let bad_label = run(&["train", "--data", s(&labels), "--out", s(&model)]);
    assert_eq!(bad_label.status.code(), Some(1));
}
