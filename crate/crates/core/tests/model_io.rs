use std::fs;

use chrono::NaiveDate;
use ecs_eval::model::{
    load_corpus, load_instances, load_predictions, to_json_line, write_jsonl, Argument, ArgumentRole, CausalKind,
    CausalRelation, CorpusError, Document, GeneratedSummary, GlobalAnnotation, Instance, ReferenceKind, Split,
    TemporalRelation,
};

fn annotated(id: &str) -> Instance {
    let docs = (0..6)
        .map(|i| {
            Document::new(format!("{id}-d{i}"), format!("第{i}篇。"))
                .with_publish_time(NaiveDate::from_ymd_opt(2023, 7, 1 + i).unwrap())
        })
        .collect();
    let mut inst = Instance::new(id, "台风登陆", docs, "台风登陆。随后，城市停运。");
    inst.reference_kind = ReferenceKind::Human;
    inst.temporal = vec![TemporalRelation::before("台风登陆", "城市停运")];
    inst.global_annotation = Some(GlobalAnnotation {
        sub_events: vec!["台风登陆".into(), "城市停运".into()],
        arguments: vec![Argument::new("福建省", ArgumentRole::Location).with_corefs(["闽"])],
        causal: vec![CausalRelation::new("台风登陆", "城市停运", CausalKind::Cause)],
    });
    inst.event_date = NaiveDate::from_ymd_opt(2023, 7, 1);
    inst
}

#[test]
fn instances_round_trip_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("test.jsonl");
    let records = vec![annotated("a"), annotated("b"), annotated("c")];
    write_jsonl(&path, &records).unwrap();
    let first = fs::read(&path).unwrap();
    let loaded = load_corpus(dir.path(), Split::Test).unwrap();
    assert_eq!(loaded, records);
    let ids: Vec<&str> = loaded.iter().map(|i| i.instance_id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    write_jsonl(&path, &loaded).unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn after_records_are_swapped_on_ingest() {
    let mut v: serde_json::Value = serde_json::from_str(&to_json_line(&annotated("a"))).unwrap();
    v["temporal"] = serde_json::json!([{"earlier": "城市停运", "later": "台风登陆", "relation": "after"}]);
    let inst: Instance = serde_json::from_value(v).unwrap();
    assert_eq!(inst.temporal[0], TemporalRelation::before("台风登陆", "城市停运"));
}

#[test]
fn malformed_second_line_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("test.jsonl");
    let good = to_json_line(&annotated("a"));
    fs::write(&path, format!("{good}\n{{\"instance_id\": \"b\", \"documents\": [\n")).unwrap();
    match load_instances(&path) {
        Err(CorpusError::MalformedRecord { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_second_record_is_named_with_its_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("test.jsonl");
    let mut bad = annotated("b");
    bad.documents.truncate(4);
    fs::write(
        &path,
        format!("{}\n{}\n", to_json_line(&annotated("a")), to_json_line(&bad)),
    )
    .unwrap();
    let err = load_instances(&path).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, CorpusError::MalformedRecord { line: 2, .. }));
    assert!(msg.contains("document count 4"), "{msg}");
}

#[test]
fn duplicate_prediction_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.jsonl");
    let s = GeneratedSummary {
        instance_id: "a".into(),
        system_id: "sys".into(),
        text: "摘要".into(),
        shots: 1,
    };
    write_jsonl(&path, &[s.clone(), s]).unwrap();
    assert!(matches!(
        load_predictions(&path),
        Err(CorpusError::DuplicatePrediction(_))
    ));
}
