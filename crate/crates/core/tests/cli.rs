mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hdbnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdbnn")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_corpus(path: &Path) {
    let corpus = common::synthetic_corpus(15, 5, 21);
    let sentences: Vec<serde_json::Value> = corpus
        .samples
        .iter()
        .map(|s| serde_json::json!({"text": s.text, "intent": s.intent, "training": s.split.as_str() == "train"}))
        .collect();
    fs::write(path, serde_json::json!({ "sentences": sentences }).to_string()).unwrap();
}

#[test]
fn tokenize_prints_one_line_per_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    fs::write(&input, "Hello, World!\nthe cat\n").unwrap();
    let p = input.to_str().unwrap();
    assert_eq!(stdout(&hdbnn(&["tokenize", "--method", "semhash", "--in", p])), "#He Hel ell llo lo# #Wo Wor orl rld ld#\n#th the he# #ca cat at#\n");
    assert_eq!(stdout(&hdbnn(&["tokenize", "--method", "word", "--in", p])), "Hello World\ncat\n");
    let lower = hdbnn(&["tokenize", "--method", "word", "--keep-stopwords", "--lowercase", "--in", p]);
    assert_eq!(stdout(&lower), "hello world\nthe cat\n");
}

#[test]
fn embed_is_deterministic_json() {
    let args = ["embed", "--dim", "512", "--text", "book a flight", "--seed", "4"];
    let a = stdout(&hdbnn(&args));
    assert_eq!(a, stdout(&hdbnn(&args)));
    let v: serde_json::Value = serde_json::from_str(a.trim()).unwrap();
    assert_eq!(v["dim"], 512);
    assert_eq!(v["vector"].as_str().unwrap().len(), 128);
    let real = stdout(&hdbnn(&["embed", "--dim", "64", "--mode", "real", "--text", "x"]));
    let v: serde_json::Value = serde_json::from_str(real.trim()).unwrap();
    assert_eq!(v["vector"].as_array().unwrap().len(), 64);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "dim = 300\n").unwrap();
    assert_eq!(hdbnn(&["train", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    fs::write(&cfg, "no equals sign\n").unwrap();
    assert_eq!(hdbnn(&["train", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(hdbnn(&["embed", "--dim", "0", "--text", "x"]).status.code(), Some(2));
    assert_eq!(hdbnn(&["tokenize", "--method", "nope", "--in", "x"]).status.code(), Some(2));
    let junk = dir.path().join("junk.bin");
    fs::write(&junk, b"not a model").unwrap();
    assert_eq!(hdbnn(&["infer", "--model", junk.to_str().unwrap(), "--text", "hi"]).status.code(), Some(2));
}

#[test]
fn missing_files_exit_with_one() {
    assert_eq!(hdbnn(&["train", "--config", "/nonexistent/x.cfg"]).status.code(), Some(1));
}

#[test]
fn train_export_eval_infer() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    write_corpus(Path::new(&p("corpus.json")));
    let cfg_text = format!(
        "corpus = {}\nclassifier = bnn\ndim = 512\nepochs = 6\nrepeats = 1\nreport = {}\ncheckpoint = {}\nexport = {}\n",
        p("corpus.json"),
        p("report.json"),
        p("model.ck"),
        p("model.hbnn")
    );
    fs::write(p("run.cfg"), &cfg_text).unwrap();
    stdout(&hdbnn(&["train", "--config", &p("run.cfg")]));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("report.json")).unwrap()).unwrap();
    assert!(report["summary"].is_object());
    assert!(Path::new(&p("report.timings.json")).exists());

    stdout(&hdbnn(&["export", "--checkpoint", &p("model.ck"), "--out", &p("again.hbnn")]));
    assert_eq!(fs::read(p("again.hbnn")).unwrap(), fs::read(p("model.hbnn")).unwrap());

    let packed = stdout(&hdbnn(&["eval", "--model", &p("model.hbnn"), "--corpus", &p("corpus.json"), "--config", &p("run.cfg")]));
    let float = stdout(&hdbnn(&["eval", "--model", &p("model.ck"), "--corpus", &p("corpus.json"), "--config", &p("run.cfg")]));
    assert_eq!(packed, float);
    let metrics: serde_json::Value = serde_json::from_str(&packed).unwrap();
    assert_eq!(metrics["split"], "test");
    let micro_eval = metrics["metrics"]["micro_f1"].as_f64().unwrap();
    let m = report["summary"]["test_micro_f1_mean"].as_f64().unwrap();
    assert!((m - micro_eval).abs() < 1e-6, "{m} vs {micro_eval}");

    let a = stdout(&hdbnn(&["infer", "--model", &p("model.hbnn"), "--text", "is it going to rain", "--config", &p("run.cfg")]));
    let b = stdout(&hdbnn(&["infer", "--model", &p("model.ck"), "--text", "is it going to rain", "--config", &p("run.cfg")]));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["logits"].as_array().unwrap().len(), 3);
}
