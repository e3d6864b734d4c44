use ecs_eval::corpus::{
    annotate_temporal, assemble_instance, filter_by_relevance, AnnotatedPair, Assembly, BuildError, PipelineConfig,
    RejectReason, RelationAnnotator, ScoredDocument,
};
use ecs_eval::embedding::{EmbeddingProvider, ProviderError};
use ecs_eval::model::{instance_violations, Document, Instance, TemporalOrder};
use proptest::prelude::*;

/// Similarity is read from a `score=` prefix in the document body.
struct TableProvider;

fn score_of(body: &str) -> f64 {
    body.strip_prefix("score=")
        .and_then(|r| r.split('|').next())
        .unwrap()
        .parse()
        .unwrap()
}

impl EmbeddingProvider for TableProvider {
    fn name(&self) -> String {
        "table".into()
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, ProviderError> {
        Ok(texts.iter().map(|_| vec![1.0]).collect())
    }

    fn score_against(&self, texts: &[&str], _anchor: &str) -> Result<Vec<f64>, ProviderError> {
        Ok(texts.iter().map(|t| score_of(t)).collect())
    }
}

fn docs(scores: &[f64]) -> Vec<Document> {
    scores
        .iter()
        .enumerate()
        .map(|(i, s)| Document::new(format!("d{i:02}"), format!("score={s}|第{i}篇报道")))
        .collect()
}

fn ids(scored: &[ScoredDocument]) -> Vec<String> {
    scored.iter().map(|d| d.document.doc_id.clone()).collect()
}

fn filter(d: Vec<Document>, threshold: f64) -> Vec<ScoredDocument> {
    let config = PipelineConfig {
        similarity_threshold: threshold,
        ..Default::default()
    };
    filter_by_relevance(d, "参考摘要", &TableProvider, &config).unwrap()
}

fn scores(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..=100).prop_map(|x| x as f64 / 100.0), 0..=max)
}

proptest! {
    #[test]
    fn filtering_is_idempotent(s in scores(30), t in 0.0f64..1.0) {
        let once = filter(docs(&s), t);
        let twice = filter(once.iter().map(|d| d.document.clone()).collect(), t);
        prop_assert_eq!(ids(&once), ids(&twice));
    }

    #[test]
    fn raising_the_threshold_only_removes(s in scores(30), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let loose = ids(&filter(docs(&s), lo));
        let strict = ids(&filter(docs(&s), hi));
        prop_assert!(strict.iter().all(|id| loose.contains(id)));
        // kept exactly when the score reaches the threshold
        let expected: Vec<String> = s.iter().enumerate().filter(|(_, x)| **x >= hi).map(|(i, _)| format!("d{i:02}")).collect();
        prop_assert_eq!(strict, expected);
    }

    #[test]
    fn assembled_instances_respect_invariants(s in scores(30)) {
        let config = PipelineConfig::default();
        let kept = filter(docs(&s), config.similarity_threshold);
        let n = kept.len();
        match assemble_instance("某地暴雨", kept.clone(), "参考摘要。", &config).unwrap() {
            Assembly::Admitted(inst) => {
                prop_assert!(n >= 5);
                prop_assert_eq!(inst.documents.len(), n.min(20));
                prop_assert!(instance_violations(&inst).is_empty());
                // the dropped documents never outscore a kept one
                let kept_ids: Vec<&str> = inst.documents.iter().map(|d| d.doc_id.as_str()).collect();
                let min_kept = inst.documents.iter().map(|d| score_of(&d.body)).fold(f64::INFINITY, f64::min);
                for d in &kept {
                    if !kept_ids.contains(&d.document.doc_id.as_str()) {
                        prop_assert!(d.similarity.unwrap() <= min_kept);
                    }
                }
                // original order survives truncation
                let mut sorted = kept_ids.clone();
                sorted.sort();
                prop_assert_eq!(kept_ids, sorted);
            }
            Assembly::Rejected(RejectReason::TooFewDocuments { count, min }) => {
                prop_assert!(count < 5);
                prop_assert_eq!(min, 5);
            }
            Assembly::Rejected(other) => prop_assert!(false, "unexpected rejection {other:?}"),
        }
    }
}

#[test]
fn thirty_candidates_with_half_relevant() {
    // scores 0/30 .. 29/30: indices 15..=29 reach 0.5
    let s: Vec<f64> = (0..30).map(|i| i as f64 / 30.0).collect();
    let config = PipelineConfig::default();
    let kept = filter(docs(&s), config.similarity_threshold);
    assert_eq!(kept.len(), 15);
    assert_eq!(kept[0].document.doc_id, "d15");
    let inst = assemble_instance("t", kept, "参考。", &config)
        .unwrap()
        .instance()
        .unwrap();
    assert_eq!(inst.documents.len(), 15);
}

#[test]
fn twenty_five_relevant_truncate_to_top_twenty() {
    let s: Vec<f64> = (0..25)
        .map(|i| 0.5 + (i % 10) as f64 / 100.0 + i as f64 / 10000.0)
        .collect();
    let config = PipelineConfig::default();
    let kept = filter(docs(&s), 0.5);
    assert_eq!(kept.len(), 25);
    let inst = assemble_instance("t", kept, "参考。", &config)
        .unwrap()
        .instance()
        .unwrap();
    assert_eq!(inst.documents.len(), 20);
    let mut ranked: Vec<usize> = (0..25).collect();
    ranked.sort_by(|a, b| s[*b].total_cmp(&s[*a]));
    let mut expected: Vec<String> = ranked[..20].iter().map(|i| format!("d{i:02}")).collect();
    expected.sort();
    let got: Vec<String> = inst.documents.iter().map(|d| d.doc_id.clone()).collect();
    assert_eq!(got, expected);
}

#[test]
fn four_relevant_are_rejected() {
    let s = [0.9, 0.8, 0.7, 0.6, 0.1, 0.2];
    let kept = filter(docs(&s), 0.5);
    let out = assemble_instance("t", kept, "参考。", &PipelineConfig::default()).unwrap();
    assert_eq!(
        out,
        Assembly::Rejected(RejectReason::TooFewDocuments { count: 4, min: 5 })
    );
}

struct Fixed(Vec<AnnotatedPair>);

impl RelationAnnotator for Fixed {
    fn annotate(&self, _: &str) -> Result<Vec<AnnotatedPair>, BuildError> {
        Ok(self.0.clone())
    }
}

proptest! {
    #[test]
    fn stored_relations_are_before_and_grounded(orders in prop::collection::vec(any::<bool>(), 1..6)) {
        let sents: Vec<String> = (0..=orders.len()).map(|i| format!("第{i}阶段")).collect();
        let reference = sents.join("。") + "。";
        let pairs = orders
            .iter()
            .enumerate()
            .map(|(i, after)| {
                if *after {
                    AnnotatedPair::new(sents[i + 1].clone(), sents[i].clone(), TemporalOrder::After)
                } else {
                    AnnotatedPair::new(sents[i].clone(), sents[i + 1].clone(), TemporalOrder::Before)
                }
            })
            .collect();
        let d = docs(&[1.0; 5]);
        let inst = Instance::new("i", "t", d, reference.clone());
        let (inst, stats) = annotate_temporal(inst, &Fixed(pairs)).unwrap();
        prop_assert_eq!(stats.stored, orders.len());
        for (i, r) in inst.temporal.iter().enumerate() {
            prop_assert_eq!(r.relation(), TemporalOrder::Before);
            prop_assert_eq!(&r.earlier, &sents[i]);
            prop_assert_eq!(&r.later, &sents[i + 1]);
        }
        prop_assert!(instance_violations(&inst).is_empty());
    }
}
