use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rulecraft::data::{write_idx, RawImageSet};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rulecraft"));
    c.env_remove("RULECRAFT_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// 4x4 images; label `l` lights row `l`, plus one stray pixel per image.
fn write_images(dir: &Path, split: &str, per_label: usize) -> PathBuf {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..per_label {
        for label in 0..3u8 {
            let mut img = [0u8; 16];
            for x in 0..4 {
                img[label as usize * 4 + x] = 200;
            }
            img[12 + (i % 4)] = if i % 3 == 0 { 255 } else { 0 };
            pixels.extend_from_slice(&img);
            labels.push(label);
        }
    }
    let set = RawImageSet::new(4, 4, pixels, labels).unwrap();
    let images = dir.join(format!("{split}-images-idx3-ubyte"));
    write_idx(&set, &images, dir.join(format!("{split}-labels-idx1-ubyte"))).unwrap();
    images
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_images(tmp: &TempDir, extra: &[&str]) -> (PathBuf, PathBuf, Output) {
    let images = write_images(tmp.path(), "train", 12);
    let model = tmp.path().join("model");
    let mut args = vec!["train", "--train", path(&images), "--out", path(&model)];
    args.extend_from_slice(extra);
    let out = run(&args);
    (images, model, out)
}

#[test]
fn train_writes_model_directory() {
    let tmp = TempDir::new().unwrap();
    let (_, model, out) = train_images(
        &tmp,
        &[
            "--learner",
            "foil",
            "--modular",
            "--pos-clusters",
            "5",
            "--rule-cap",
            "20",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    for f in ["config.json", "timings.json", "dataset.json"] {
        assert!(model.join(f).exists(), "{f}");
    }
    let rules: Vec<_> = fs::read_dir(&model)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "rules"))
        .collect();
    assert_eq!(rules.len(), 3);
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["config"]["pos_clusters"], 5);
    assert_eq!(config["config"]["rule_cap_per_cluster"], 20);
    assert_eq!(config["config"]["learner"], "foil");
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let out = run(&["train", "--train", "/definitely/not/here-images-idx3-ubyte"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: config: dataset not found"), "{err}");
}

#[test]
fn bad_flags_and_configs_exit_with_two() {
    assert_eq!(run(&["train", "--no-such-flag"]).status.code(), Some(2));
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"dataset": {"kind": "csv", "preprocess": "bow"}}"#).unwrap();
    let out = run(&["train", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("does not apply"));
    fs::write(&cfg, r#"{"pipeline": {"unknown_knob": 1}}"#).unwrap();
    assert_eq!(run(&["train", "--config", path(&cfg)]).status.code(), Some(2));
}

#[test]
fn eval_on_training_data_beats_majority() {
    let tmp = TempDir::new().unwrap();
    let (images, model, out) = train_images(&tmp, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = run(&["eval", "--model", path(&model), "--test", path(&images)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("recall"));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model.join("metrics.json")).unwrap()).unwrap();
    for key in [
        "accuracy",
        "macro_precision",
        "macro_recall",
        "per_label",
        "confusion",
        "wall_time_s",
    ] {
        assert!(metrics.get(key).is_some(), "{key}");
    }
    assert!(metrics["accuracy"].as_f64().unwrap() >= 1.0 / 3.0);
}

#[test]
fn eval_rejects_empty_test_set() {
    let tmp = TempDir::new().unwrap();
    let (_, model, _) = train_images(&tmp, &[]);
    let empty = write_images(tmp.path(), "empty", 0);
    let out = run(&["eval", "--model", path(&model), "--test", path(&empty)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("empty"));
}

#[test]
fn predict_prints_one_label_per_example() {
    let tmp = TempDir::new().unwrap();
    let (images, model, _) = train_images(&tmp, &[]);
    let out = run(&["predict", "--model", path(&model), "--input", path(&images)]);
    assert!(out.status.success());
    let lines: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 36);
    assert!(lines.iter().all(|l| ["0", "1", "2"].contains(&l.as_str())));
}

#[test]
fn explain_json_reports_match_profiles() {
    let tmp = TempDir::new().unwrap();
    let (images, model, _) = train_images(&tmp, &[]);
    let out = run(&[
        "explain",
        "--model",
        path(&model),
        "--input",
        path(&images),
        "--index",
        "1",
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let labels = v["labels"].as_array().unwrap();
    assert_eq!(labels.len(), 3);
    for l in labels {
        assert!(l["fired"].is_boolean() && l["longest_fired"].is_u64() && l["best_partial"].is_f64());
    }
    assert!(["single", "longest", "partial"].contains(&v["decision"].as_str().unwrap()));

    let out = run(&[
        "explain",
        "--model",
        path(&model),
        "--input",
        path(&images),
        "--index",
        "1",
    ]);
    assert!(stdout(&out).starts_with("example 1: predicted"));
    let out = run(&[
        "explain",
        "--model",
        path(&model),
        "--input",
        path(&images),
        "--index",
        "999",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn training_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (_, ma, _) = train_images(&a, &["--learner", "ripper", "--seed", "7"]);
    let (_, mb, _) = train_images(&b, &["--learner", "ripper", "--seed", "7"]);
    for label in 0..3 {
        let f = format!("label_{label}.rules");
        assert_eq!(
            fs::read_to_string(ma.join(&f)).unwrap(),
            fs::read_to_string(mb.join(&f)).unwrap()
        );
    }
}

#[test]
fn config_file_with_flag_override_and_thread_fallback() {
    let tmp = TempDir::new().unwrap();
    let images = write_images(tmp.path(), "train", 6);
    let model = tmp.path().join("m");
    let cfg = tmp.path().join("c.json");
    let body = serde_json::json!({
        "train": images,
        "out": model,
        "pipeline": {"learner": "irep", "pos_clusters": 2}
    });
    fs::write(&cfg, body.to_string()).unwrap();
    let out = bin()
        .args(["train", "--config", path(&cfg), "--pos-clusters", "1"])
        .env("RULECRAFT_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["config"]["learner"], "irep");
    assert_eq!(config["config"]["pos_clusters"], 1);
    assert_eq!(config["config"]["parallelism"], 2);

    let out = bin()
        .args(["train", "--config", path(&cfg), "--parallelism", "3"])
        .env("RULECRAFT_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["config"]["parallelism"], 3);
}

#[test]
fn text_datasets_keep_their_vocabulary() {
    let tmp = TempDir::new().unwrap();
    let mut lines = String::new();
    for i in 0..30 {
        let (text, label) = if i % 2 == 0 {
            ("a great fun film", "pos")
        } else {
            ("a dull boring film", "neg")
        };
        lines.push_str(&serde_json::json!({"text": format!("{text} {i}"), "label": label}).to_string());
        lines.push('\n');
    }
    let data = tmp.path().join("reviews.jsonl");
    fs::write(&data, lines).unwrap();
    let model = tmp.path().join("m");
    let out = run(&[
        "train",
        "--kind",
        "jsonl-text",
        "--preprocess",
        "bow",
        "--vocab-size",
        "8",
        "--train",
        path(&data),
        "--out",
        path(&model),
        "--pos-clusters",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let vocab: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model.join("vocab.json")).unwrap()).unwrap();
    assert_eq!(vocab["words"].as_array().unwrap().len(), 8);
    let out = run(&["eval", "--model", path(&model), "--test", path(&data)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("accuracy 100.00%"), "{}", stdout(&out));
}

#[test]
fn csv_datasets_train_on_numeric_columns() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("cost,count,label\n");
    for i in 0..40 {
        let cost = i as f64 * 2.5;
        csv.push_str(&format!(
            "{cost},{},{}\n",
            i % 7,
            if cost > 50.0 { "high" } else { "low" }
        ));
    }
    let data = tmp.path().join("bills.csv");
    fs::write(&data, csv).unwrap();
    let model = tmp.path().join("m");
    let out = run(&[
        "train",
        "--kind",
        "csv",
        "--preprocess",
        "none",
        "--train",
        path(&data),
        "--out",
        path(&model),
        "--learner",
        "ripper",
        "--monolithic",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rules = fs::read_to_string(model.join("label_high.rules")).unwrap();
    assert!(rules.contains("gt_cost(V, 51.25)"), "{rules}");
}

#[test]
fn bench_reports_both_variants() {
    let tmp = TempDir::new().unwrap();
    let train = write_images(tmp.path(), "train", 10);
    let test = write_images(tmp.path(), "t10k", 4);
    let out_dir = tmp.path().join("bench");
    let out = run(&[
        "bench",
        "--train",
        path(&train),
        "--test",
        path(&test),
        "--repeats",
        "1",
        "--out",
        path(&out_dir),
        "--pos-clusters",
        "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().contains("speedup"));
    assert!(text.contains("foil - mod."));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("bench.json")).unwrap()).unwrap();
    assert!(report["speedup"].as_f64().unwrap() > 0.0);
    assert_eq!(report["repeats"], 1);
}
