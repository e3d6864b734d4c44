//! All eight metrics for a set of predictions.

use std::collections::HashMap;

use thiserror::Error;

use crate::analysis::ScoreRecord;
use crate::metrics::{rouge_l_with, rouge_n_with, semantic_f1, MetricError, TokenEncoder, TokenMode};
use crate::model::{GeneratedSummary, Instance, PredictionKey};
use crate::recall::{
    evaluate_summary_with_jobs, verdict_records, Discriminator, ElementKind, RecallError, VerdictRecord,
};

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("prediction {0} refers to an instance missing from the corpus")]
    MissingInstance(PredictionKey),
    #[error("{key}: {source}")]
    Metric {
        key: PredictionKey,
        #[source]
        source: MetricError,
    },
    #[error("{key}: {source}")]
    Recall {
        key: PredictionKey,
        #[source]
        source: RecallError,
    },
}

pub struct Scorer<'a> {
    pub encoder: &'a dyn TokenEncoder,
    pub discriminator: &'a dyn Discriminator,
    pub token_mode: TokenMode,
    /// Concurrent discriminator calls per summary.
    pub jobs: usize,
}

impl<'a> Scorer<'a> {
    pub fn new(encoder: &'a dyn TokenEncoder, discriminator: &'a dyn Discriminator) -> Self {
        Self {
            encoder,
            discriminator,
            token_mode: TokenMode::Char,
            jobs: 1,
        }
    }

    /// Scores one summary against its instance's reference and annotations.
    pub fn score(
        &self,
        instance: &Instance,
        summary: &GeneratedSummary,
    ) -> Result<(ScoreRecord, Vec<VerdictRecord>), EvaluateError> {
        let key = summary.key();
        let metric = |source| EvaluateError::Metric {
            key: key.clone(),
            source,
        };
        let reference = &instance.reference;
        let r1 = rouge_n_with(&summary.text, reference, 1, self.token_mode).map_err(metric)?;
        let r2 = rouge_n_with(&summary.text, reference, 2, self.token_mode).map_err(metric)?;
        let rl = rouge_l_with(&summary.text, reference, self.token_mode);
        let bs = semantic_f1(&summary.text, reference, self.encoder).map_err(metric)?;
        let outcomes =
            evaluate_summary_with_jobs(instance, summary, self.discriminator, self.jobs).map_err(|source| {
                EvaluateError::Recall {
                    key: key.clone(),
                    source,
                }
            })?;
        let recall = |k: ElementKind| outcomes.get(&k).and_then(|o| o.value());
        let record = ScoreRecord {
            instance_id: summary.instance_id.clone(),
            system_id: summary.system_id.clone(),
            shots: summary.shots,
            r1: r1.f1,
            r2: r2.f1,
            rl: rl.f1,
            semantic_f1: bs.f1,
            er: recall(ElementKind::Event),
            ar: recall(ElementKind::Argument),
            cr: recall(ElementKind::Causal),
            tr: recall(ElementKind::Temporal),
        };
        Ok((record, verdict_records(summary, &outcomes)))
    }

    /// Scores every prediction, in input order.
    pub fn score_all(
        &self,
        instances: &[Instance],
        summaries: &[GeneratedSummary],
    ) -> Result<(Vec<ScoreRecord>, Vec<VerdictRecord>), EvaluateError> {
        let by_id: HashMap<&str, &Instance> = instances.iter().map(|i| (i.instance_id.as_str(), i)).collect();
        let mut scores = Vec::with_capacity(summaries.len());
        let mut verdicts = Vec::new();
        for s in summaries {
            let inst = by_id
                .get(s.instance_id.as_str())
                .ok_or_else(|| EvaluateError::MissingInstance(s.key()))?;
            let (record, v) = self.score(inst, s)?;
            scores.push(record);
            verdicts.extend(v);
        }
        Ok((scores, verdicts))
    }
}
