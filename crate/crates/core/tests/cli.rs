use std::path::Path;
use std::process::{Command, Output};

use odorgat::synth::synthetic_csv;

fn odorgat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odorgat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_CONFIG: &str = r#"{
  "epochs": 3,
  "batch_size": 8,
  "eval_every": 1,
  "model": {"heads": 2, "hidden_width": 8, "final_width": 8, "global_hidden": 16, "global_out": 8, "fusion_hidden": 16}
}"#;

#[test]
fn train_eval_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let mut csv = synthetic_csv(40, 3);
    csv.push_str("C1CC,hydroxyl\n");
    std::fs::write(&data, csv).unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let run = dir.path().join("run");

    let o = odorgat(&["train", "--data", s(&data), "--config", s(&config), "--out", s(&run), "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("| Method | AUROC | F1 score |"));
    for f in ["final.ckpt", "best.ckpt", "epochs.jsonl", "rejected.json", "config.json", "test_metrics.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let epochs = std::fs::read_to_string(run.join("epochs.jsonl")).unwrap();
    assert_eq!(epochs.lines().count(), 3);
    let rejected: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("rejected.json")).unwrap()).unwrap();
    assert_eq!(rejected[0]["row"], 41);

    let ckpt = run.join("final.ckpt");
    let o = odorgat(&["eval", "--checkpoint", s(&ckpt), "--data", s(&data), "--json"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["samples"], 40);

    let input = dir.path().join("input.smi");
    std::fs::write(&input, "CCO\n\nc1ccccc1C=O\n").unwrap();
    let o = odorgat(&["predict", "--checkpoint", s(&ckpt), "--input", s(&input), "--top-k", "2"]);
    assert_eq!(code(&o), 0);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["line"], 3);
    assert_eq!(lines[0]["predictions"].as_array().unwrap().len(), 2);

    std::fs::write(&input, "CCO\nC1CC\n").unwrap();
    let o = odorgat(&["predict", "--checkpoint", s(&ckpt), "--input", s(&input)]);
    assert_eq!(code(&o), 2);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn featurize_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    std::fs::write(&data, "smiles,labels\nCCO,fruity;sweet\nc1ccccc1,\nXy,bad\n").unwrap();

    let out = dir.path().join("f.csv");
    let o = odorgat(&["featurize", "--data", s(&data), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 4 + 4262);
    assert_eq!(lines.count(), 2);

    let out = dir.path().join("f.json");
    let o = odorgat(&["featurize", "--data", s(&data), "--out", s(&out), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);

    let o = odorgat(&["stats", "--data", s(&data), "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["molecules"], 2);
    assert_eq!(v["distinct_labels"], 2);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&odorgat(&[])), 1);
    assert_eq!(code(&odorgat(&["train", "--data", "x.csv"])), 1);
    assert_eq!(code(&odorgat(&["featurize", "--data", "x", "--out", "y", "--format", "xml"])), 1);
    assert_eq!(code(&odorgat(&["--help"])), 0);

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&odorgat(&["stats", "--data", s(&missing)])), 2);
    let bad_header = dir.path().join("bad.csv");
    std::fs::write(&bad_header, "smi,odor\nCCO,fruity\n").unwrap();
    assert_eq!(code(&odorgat(&["stats", "--data", s(&bad_header)])), 2);
    let not_ckpt = dir.path().join("x.ckpt");
    std::fs::write(&not_ckpt, "nope").unwrap();
    assert_eq!(code(&odorgat(&["eval", "--checkpoint", s(&not_ckpt), "--data", s(&bad_header)])), 2);

    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"epochs": 1, "learning_rate": 0.1}"#).unwrap();
    let o = odorgat(&["train", "--data", s(&bad_header), "--config", s(&config), "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("learning_rate"));
}
