use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecs-eval"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn e2e() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e")
}

/// Predictions file built from the canned fixture summaries.
fn write_predictions(dir: &Path) -> PathBuf {
    let canned: HashMap<String, String> =
        serde_json::from_str(&fs::read_to_string(e2e().join("summaries.json")).unwrap()).unwrap();
    let mut body = String::new();
    for line in fs::read_to_string(e2e().join("test.jsonl")).unwrap().lines() {
        let inst: Value = serde_json::from_str(line).unwrap();
        let rec = json!({
            "instance_id": inst["instance_id"],
            "system_id": "canned",
            "text": canned[inst["event_title"].as_str().unwrap()],
            "shots": 0,
        });
        body.push_str(&rec.to_string());
        body.push('\n');
    }
    fs::create_dir_all(dir).unwrap();
    let path = dir.join("canned.0shot.jsonl");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["evaluate"]).status.code(), Some(2));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    assert_eq!(bin(&["--version"]).status.code(), Some(0));
    let missing = bin(&["stats", "--corpus", "/nonexistent/corpus.jsonl"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));
}

#[test]
fn config_problems_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "backend = \"gpt\"\ndiscriminator = \"http\"\njobs = 0\n").unwrap();
    let out = bin(&["--config", s(&cfg), "stats", "--corpus", s(&e2e().join("test.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["backend \"gpt\"", "discriminator_url", "jobs must be at least 1"] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }
}

#[test]
fn evaluate_is_reproducible_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let preds = write_predictions(&dir.path().join("p"));
    let corpus = e2e().join("test.jsonl");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        ok(&[
            "evaluate",
            "--predictions",
            s(&preds),
            "--corpus",
            s(&corpus),
            "--out",
            s(&out),
        ]);
        outputs.push((
            fs::read(out.join("scores.jsonl")).unwrap(),
            fs::read(out.join("verdicts.jsonl")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);

    let scores = fs::read_to_string(dir.path().join("a/scores.jsonl")).unwrap();
    for line in scores.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        for key in ["r1", "r2", "rl", "semantic_f1", "er", "ar", "cr", "tr"] {
            assert!(v.get(key).is_some(), "{key} missing in {line}");
        }
    }
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a/evaluation.json")).unwrap()).unwrap();
    assert_eq!(meta["discriminator"], "containment");
    assert!(meta["encoder"].as_str().is_some());

    let table = ok(&["report", "--scores", s(&dir.path().join("a"))]);
    let golden = fs::read_to_string(e2e().join("report.tsv")).unwrap();
    assert_eq!(table, golden.replace("mock", "canned"));
}

#[test]
fn analyze_writes_buckets_and_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let preds = write_predictions(&dir.path().join("p"));
    let corpus = e2e().join("test.jsonl");
    let scores = dir.path().join("scores");
    ok(&[
        "evaluate",
        "--predictions",
        s(&preds),
        "--corpus",
        s(&corpus),
        "--out",
        s(&scores),
    ]);

    // annotators disagree with the first verdict only
    let verdicts = fs::read_to_string(scores.join("verdicts.jsonl")).unwrap();
    let mut human = String::new();
    for (i, line) in verdicts.lines().enumerate() {
        let mut v: Value = serde_json::from_str(line).unwrap();
        if i == 0 {
            v["entailed"] = json!(1 - v["entailed"].as_u64().unwrap());
        }
        human.push_str(&v.to_string());
        human.push('\n');
    }
    let human_path = dir.path().join("human.jsonl");
    fs::write(&human_path, human).unwrap();

    let out = dir.path().join("analysis");
    for by in ["doc_count", "time_span"] {
        ok(&[
            "analyze",
            "--scores",
            s(&scores),
            "--corpus",
            s(&corpus),
            "--by",
            by,
            "--human",
            s(&human_path),
            "--out",
            s(&out),
        ]);
        assert!(out.join(format!("buckets.{by}.tsv")).exists());
        let plot: Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("plot.{by}.json"))).unwrap()).unwrap();
        assert!(plot.is_object());
    }
    let agreement = fs::read_to_string(out.join("agreement.tsv")).unwrap();
    let rows: Vec<&str> = agreement.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(
        rows.iter().filter(|r| !r.ends_with("\t100.0")).count(),
        1,
        "{agreement}"
    );
}

fn raw_entry(title: &str, card: Value, description: &str, n_docs: usize) -> Value {
    let retrieved: Vec<Value> = (0..n_docs)
        .map(|i| {
            json!({
                "doc_id": format!("{title}-{i}"),
                "publish_time": "2023-07-29",
                "body": format!("{description}记者第{i}次跟进报道。"),
            })
        })
        .collect();
    json!({"title": title, "card": card, "description": description, "retrieved": retrieved})
}

#[test]
fn build_corpus_then_stats_and_nli() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    fs::create_dir_all(&raw).unwrap();
    let card = json!({"时间": "2023年7月28日", "地点": "福建"});
    let entries = [
        raw_entry("台风登陆", card.clone(), "台风在福建沿海登陆。随后，多地停课停运。", 8),
        raw_entry("暴雨成灾", card.clone(), "福建多地遭遇暴雨。次日，城区出现内涝。", 6),
        raw_entry("文章太少", card, "福建一地发生小规模滑坡。", 3),
        raw_entry("某种植物", json!({"科": "菊科"}), "一种常见植物。", 8),
    ];
    let body: String = entries.iter().map(|e| e.to_string() + "\n").collect();
    fs::write(raw.join("entries.jsonl"), body).unwrap();

    let corpus = dir.path().join("corpus");
    let printed = ok(&["build-corpus", "--raw", s(&raw), "--out", s(&corpus)]);
    assert!(
        printed.contains("4 entries, 2 admitted, 1 rejected, 1 not events"),
        "{printed}"
    );
    let report: Value = serde_json::from_str(&fs::read_to_string(corpus.join("build_report.json")).unwrap()).unwrap();
    assert_eq!(report["admitted"], 2);
    assert_eq!(report["temporal"]["stored"], 2);

    let stats: Value = serde_json::from_str(&ok(&["stats", "--corpus", s(&corpus), "--json"])).unwrap();
    assert_eq!(stats["instances"], 2);
    assert_eq!(stats["documents"], 14);

    let mut manifests = Vec::new();
    for run in ["n1", "n2"] {
        let out = dir.path().join(run);
        ok(&[
            "build-nli-data",
            "--kind",
            "temporal",
            "--corpus",
            s(&e2e().join("test.jsonl")),
            "--out",
            s(&out),
            "--declare-reference-sizes",
        ]);
        manifests.push(fs::read(out.join("temporal.manifest.json")).unwrap());
    }
    assert_eq!(manifests[0], manifests[1]);
    let m: Value = serde_json::from_slice(&manifests[0]).unwrap();
    assert_eq!(m["declared"], json!({"train": 9678, "dev": 1461, "test": 1318}));
}
