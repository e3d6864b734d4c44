use std::sync::atomic::{AtomicUsize, Ordering};

use ecs_eval::model::{Document, GeneratedSummary, GlobalAnnotation, Instance, ReferenceKind};
use ecs_eval::recall::{
    evaluate_summary, recall_for_kind, recall_for_kind_with_jobs, AbsenceReason, ContainmentOracle, Discriminator,
    DiscriminatorError, ElementKind, KeyElement, KeyElementSet, RecallOutcome,
};

fn summary(text: &str) -> GeneratedSummary {
    GeneratedSummary {
        instance_id: "i".into(),
        system_id: "s".into(),
        text: text.into(),
        shots: 0,
    }
}

fn sentences(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("第{i:02}号事件发生")).collect()
}

fn event_set(sents: &[String]) -> KeyElementSet {
    KeyElementSet::new(ElementKind::Event, sents.iter().map(KeyElement::event).collect()).unwrap()
}

fn text_for(sents: &[String], mask: u32) -> String {
    let mut t = String::from("综述：");
    for (i, s) in sents.iter().enumerate() {
        if mask & (1 << i) != 0 {
            t.push_str(s);
            t.push('。');
        }
    }
    t
}

#[test]
fn every_verdict_pattern_up_to_ten_elements() {
    for n in 1..=10usize {
        let sents = sentences(n);
        let set = event_set(&sents);
        let mut by_mask = vec![0.0; 1 << n];
        for mask in 0u32..(1 << n) {
            let out = recall_for_kind(&set, &summary(&text_for(&sents, mask)), &ContainmentOracle).unwrap();
            let r = out.result().expect("non-empty set is present");
            assert_eq!(r.entailed, mask.count_ones() as usize);
            assert_eq!(r.total, n);
            assert_eq!(r.recall, mask.count_ones() as f64 / n as f64);
            for (i, v) in r.per_element.iter().enumerate() {
                assert_eq!(v.entailed, mask & (1 << i) != 0);
            }
            by_mask[mask as usize] = r.recall;
        }
        for mask in 0..(1usize << n) {
            for bit in 0..n {
                assert!(by_mask[mask | (1 << bit)] >= by_mask[mask]);
            }
        }
    }
}

/// Answers from a fixed verdict table and counts calls.
struct Scripted {
    verdicts: Vec<bool>,
    calls: AtomicUsize,
}

impl Discriminator for Scripted {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn judge(&self, _summary: &str, element: &KeyElement) -> Result<bool, DiscriminatorError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let idx: usize = element.rendered[3..5].parse().unwrap();
        Ok(self.verdicts[idx])
    }

    fn max_in_flight(&self) -> usize {
        4
    }
}

#[test]
fn parallel_judging_keeps_element_order() {
    let sents = sentences(10);
    let set = event_set(&sents);
    let verdicts: Vec<bool> = (0..10).map(|i| i % 3 == 0).collect();
    let d = Scripted {
        verdicts: verdicts.clone(),
        calls: AtomicUsize::new(0),
    };
    let r = recall_for_kind_with_jobs(&set, &summary("x"), &d, 8).unwrap();
    let got: Vec<bool> = r.result().unwrap().per_element.iter().map(|v| v.entailed).collect();
    assert_eq!(got, verdicts);
    assert_eq!(d.calls.load(Ordering::SeqCst), 10);
    assert_eq!(r.value(), Some(0.4));
}

#[test]
fn absence_is_never_a_number() {
    let docs = (0..5).map(|i| Document::new(format!("d{i}"), "正文")).collect();
    let mut inst = Instance::new("i", "t", docs, "参考摘要。");
    let out = evaluate_summary(&inst, &summary("随便写点什么"), &ContainmentOracle).unwrap();
    assert_eq!(
        out[&ElementKind::Event],
        RecallOutcome::Absent(AbsenceReason::MissingAnnotation)
    );
    assert_eq!(
        out[&ElementKind::Temporal],
        RecallOutcome::Absent(AbsenceReason::EmptyElementSet)
    );
    assert!(out.values().all(|o| o.value().is_none()));

    inst.reference_kind = ReferenceKind::Human;
    inst.global_annotation = Some(GlobalAnnotation {
        sub_events: vec!["暴雨来袭".into()],
        ..Default::default()
    });
    let out = evaluate_summary(&inst, &summary("没有提到"), &ContainmentOracle).unwrap();
    assert_eq!(out[&ElementKind::Event].value(), Some(0.0));
    assert_eq!(
        out[&ElementKind::Argument],
        RecallOutcome::Absent(AbsenceReason::EmptyElementSet)
    );
}

#[test]
fn empty_summary_is_an_error() {
    let set = event_set(&sentences(2));
    assert!(recall_for_kind(&set, &summary("  "), &ContainmentOracle).is_err());
}
