//! Aggregation of per-instance scores into report rows, bucketed breakdowns
//! and metric/human agreement.
//!
//! Scores are stored as fractions in `[0, 1]`; report rows hold percentages.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dates::extract_dates;
use crate::model::{Instance, PredictionKey};
use crate::recall::{ElementKind, VerdictRecord};

/// Every metric of one generated summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub instance_id: String,
    pub system_id: String,
    pub shots: u32,
    pub r1: f64,
    pub r2: f64,
    pub rl: f64,
    pub semantic_f1: f64,
    pub er: Option<f64>,
    pub ar: Option<f64>,
    pub cr: Option<f64>,
    pub tr: Option<f64>,
}

impl ScoreRecord {
    pub fn key(&self) -> PredictionKey {
        PredictionKey {
            instance_id: self.instance_id.clone(),
            system_id: self.system_id.clone(),
            shots: self.shots,
        }
    }

    /// Metric values in report column order.
    pub fn values(&self) -> [Option<f64>; 8] {
        [
            Some(self.r1),
            Some(self.r2),
            Some(self.rl),
            Some(self.semantic_f1),
            self.er,
            self.ar,
            self.cr,
            self.tr,
        ]
    }
}

pub const METRIC_COLUMNS: [&str; 8] = ["R-1", "R-2", "R-L", "BS", "ER", "AR", "CR", "TR"];

/// Macro averages of one system, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub system_id: String,
    pub shots: u32,
    pub r1: f64,
    pub r2: f64,
    pub rl: f64,
    pub semantic_f1: f64,
    pub er: Option<f64>,
    pub ar: Option<f64>,
    pub cr: Option<f64>,
    pub tr: Option<f64>,
    pub n_instances: usize,
}

impl ReportRow {
    pub fn values(&self) -> [Option<f64>; 8] {
        [
            Some(self.r1),
            Some(self.r2),
            Some(self.rl),
            Some(self.semantic_f1),
            self.er,
            self.ar,
            self.cr,
            self.tr,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("duplicate score record for {0}")]
    DuplicateScoreRecord(PredictionKey),
    #[error("score for {0} refers to an instance missing from the corpus")]
    UnknownInstance(String),
    #[error("invalid bucketing: {0}")]
    InvalidBucketing(String),
    #[error("verdict vectors differ in length ({predicted} vs {human})")]
    LengthMismatch { predicted: usize, human: usize },
    #[error("no verdicts to compare")]
    EmptyInput,
    #[error("verdict {0} is not 0 or 1")]
    InvalidVerdict(u8),
}

/// Mean of `values`, clamped into their range so rounding in the sum can
/// never push it outside.
fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((values.iter().sum::<f64>() / values.len() as f64).clamp(lo, hi))
}

/// One row over a group of records of the same system. Records are
/// averaged in instance-id order so the result does not depend on input
/// order; recall columns average over the instances where they exist.
fn row_for(system_id: &str, shots: u32, records: &mut [&ScoreRecord]) -> ReportRow {
    records.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let column = |i: usize| -> Option<f64> {
        let present: Vec<f64> = records.iter().filter_map(|r| r.values()[i]).collect();
        mean(&present).map(|m| m * 100.0)
    };
    ReportRow {
        system_id: system_id.to_string(),
        shots,
        r1: column(0).unwrap_or(0.0),
        r2: column(1).unwrap_or(0.0),
        rl: column(2).unwrap_or(0.0),
        semantic_f1: column(3).unwrap_or(0.0),
        er: column(4),
        ar: column(5),
        cr: column(6),
        tr: column(7),
        n_instances: records.len(),
    }
}

fn check_unique(scores: &[ScoreRecord]) -> Result<(), AnalysisError> {
    let mut seen = HashSet::new();
    for s in scores {
        if !seen.insert(s.key()) {
            return Err(AnalysisError::DuplicateScoreRecord(s.key()));
        }
    }
    Ok(())
}

fn group(scores: &[ScoreRecord]) -> BTreeMap<(String, u32), Vec<&ScoreRecord>> {
    let mut groups: BTreeMap<(String, u32), Vec<&ScoreRecord>> = BTreeMap::new();
    for s in scores {
        groups.entry((s.system_id.clone(), s.shots)).or_default().push(s);
    }
    groups
}

/// Macro-averaged rows per `(system_id, shots)`, ordered by system then shots.
pub fn aggregate_report(scores: &[ScoreRecord]) -> Result<Vec<ReportRow>, AnalysisError> {
    check_unique(scores)?;
    Ok(group(scores)
        .into_iter()
        .map(|((system, shots), mut records)| row_for(&system, shots, &mut records))
        .collect())
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"))
}

/// Tab-separated report with one header line.
pub fn render_tsv(rows: &[ReportRow]) -> String {
    let mut out = format!("System\tShots\tN\t{}\n", METRIC_COLUMNS.join("\t"));
    for row in rows {
        let cells: Vec<String> = row.values().into_iter().map(cell).collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            row.system_id,
            row.shots,
            row.n_instances,
            cells.join("\t")
        );
    }
    out
}

/// Days between the earliest and latest date mentioned in the reference.
///
/// Relative dates resolve against the event date when it is known. No date
/// at all gives `None`; a single date gives 0.
pub fn time_span(instance: &Instance) -> Option<i64> {
    let dates = extract_dates(&instance.reference, instance.event_date);
    let lo = dates.iter().min()?;
    let hi = dates.iter().max()?;
    Some((*hi - *lo).num_days())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    DocCount,
    TimeSpan,
}

impl std::str::FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "doc_count" => Ok(Dimension::DocCount),
            "time_span" => Ok(Dimension::TimeSpan),
            other => Err(format!("unknown dimension {other:?} (expected doc_count or time_span)")),
        }
    }
}

pub const UNKNOWN_BUCKET: &str = "unknown";

/// Intervals over one dimension: `[e0, e1]`, `(e1, e2]`, ..., with values
/// outside the edges clamped into the first or last interval. Instances
/// without a value go to an extra `unknown` bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucketing {
    pub dimension: Dimension,
    pub edges: Vec<f64>,
    /// One label per interval; generated from the edges when empty.
    #[serde(default)]
    pub labels: Vec<String>,
}

impl Bucketing {
    pub fn doc_count() -> Self {
        Self {
            dimension: Dimension::DocCount,
            edges: vec![5.0, 8.0, 12.0, 16.0, 20.0],
            labels: Vec::new(),
        }
    }

    pub fn time_span() -> Self {
        Self {
            dimension: Dimension::TimeSpan,
            edges: vec![0.0, 1.0, 7.0, 30.0, f64::INFINITY],
            labels: vec![
                "within one day".into(),
                "one day to one week".into(),
                "one week to one month".into(),
                "over one month".into(),
            ],
        }
    }

    pub fn default_for(dimension: Dimension) -> Self {
        match dimension {
            Dimension::DocCount => Self::doc_count(),
            Dimension::TimeSpan => Self::time_span(),
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.edges.len() < 2 {
            return Err(AnalysisError::InvalidBucketing("need at least two edges".into()));
        }
        if self.edges.iter().any(|e| e.is_nan()) || self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AnalysisError::InvalidBucketing(
                "edges must be strictly increasing".into(),
            ));
        }
        if !self.labels.is_empty() && self.labels.len() != self.edges.len() - 1 {
            return Err(AnalysisError::InvalidBucketing(format!(
                "{} labels for {} intervals",
                self.labels.len(),
                self.edges.len() - 1
            )));
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        if !self.labels.is_empty() {
            return self.labels.clone();
        }
        let fmt = |x: f64| {
            if x.is_infinite() {
                "inf".to_string()
            } else {
                format!("{x}")
            }
        };
        self.edges
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let open = if i == 0 { '[' } else { '(' };
                format!("{open}{},{}]", fmt(w[0]), fmt(w[1]))
            })
            .collect()
    }

    /// Interval index of `value`.
    pub fn bucket_of(&self, value: f64) -> usize {
        let last = self.edges.len() - 2;
        (0..=last).find(|&i| value <= self.edges[i + 1]).unwrap_or(last)
    }

    pub fn value_of(&self, instance: &Instance) -> Option<f64> {
        match self.dimension {
            Dimension::DocCount => Some(instance.documents.len() as f64),
            Dimension::TimeSpan => time_span(instance).map(|d| d as f64),
        }
    }

    /// Bucket label of an instance (`unknown` when it has no value).
    pub fn label_of(&self, instance: &Instance) -> String {
        match self.value_of(instance) {
            Some(v) => self.labels()[self.bucket_of(v)].clone(),
            None => UNKNOWN_BUCKET.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub label: String,
    /// Corpus instances in the bucket.
    pub size: usize,
    /// Absent when no scored instance falls in the bucket.
    pub row: Option<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub dimension: Dimension,
    pub labels: Vec<String>,
    pub sizes: Vec<usize>,
    /// Rows per system key `system@shots`, aligned with `labels`.
    pub systems: BTreeMap<String, Vec<BucketRow>>,
    /// How the dimension is measured.
    pub definition: String,
}

impl BucketReport {
    /// Plot-ready series: for each system and metric, one value per bucket.
    pub fn series(&self) -> BTreeMap<String, BTreeMap<&'static str, Vec<Option<f64>>>> {
        self.systems
            .iter()
            .map(|(system, rows)| {
                let per_metric = METRIC_COLUMNS
                    .iter()
                    .enumerate()
                    .map(|(i, name)| {
                        (
                            *name,
                            rows.iter()
                                .map(|b| b.row.as_ref().and_then(|r| r.values()[i]))
                                .collect(),
                        )
                    })
                    .collect();
                (system.clone(), per_metric)
            })
            .collect()
    }

    pub fn to_plot_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dimension": self.dimension,
            "definition": self.definition,
            "x": self.labels,
            "sizes": self.sizes,
            "series": self.series(),
        })
    }

    pub fn render_tsv(&self) -> String {
        let mut out = format!("System\tShots\tBucket\tSize\tN\t{}\n", METRIC_COLUMNS.join("\t"));
        for rows in self.systems.values() {
            for b in rows {
                let (system, shots) = match &b.row {
                    Some(r) => (r.system_id.clone(), r.shots.to_string()),
                    None => (String::new(), String::new()),
                };
                let n = b.row.as_ref().map_or(0, |r| r.n_instances);
                let cells: Vec<String> = match &b.row {
                    Some(r) => r.values().into_iter().map(cell).collect(),
                    None => vec!["-".to_string(); METRIC_COLUMNS.len()],
                };
                let _ = writeln!(
                    out,
                    "{system}\t{shots}\t{}\t{}\t{n}\t{}",
                    b.label,
                    b.size,
                    cells.join("\t")
                );
            }
        }
        out
    }
}

/// Per-bucket macro averages for every system in `scores`.
///
/// The `unknown` bucket is listed only when some instance lacks a value.
pub fn bucket_metrics(
    scores: &[ScoreRecord],
    instances: &[Instance],
    bucketing: &Bucketing,
) -> Result<BucketReport, AnalysisError> {
    bucketing.validate()?;
    check_unique(scores)?;
    let mut labels = bucketing.labels();
    let bucket: HashMap<&str, String> = instances
        .iter()
        .map(|i| (i.instance_id.as_str(), bucketing.label_of(i)))
        .collect();
    if bucket.values().any(|l| l == UNKNOWN_BUCKET) {
        labels.push(UNKNOWN_BUCKET.to_string());
    }
    let sizes: Vec<usize> = labels
        .iter()
        .map(|l| bucket.values().filter(|b| *b == l).count())
        .collect();

    let mut systems = BTreeMap::new();
    for ((system, shots), records) in group(scores) {
        let mut by_bucket: HashMap<&str, Vec<&ScoreRecord>> = HashMap::new();
        for r in records {
            let label = bucket
                .get(r.instance_id.as_str())
                .ok_or_else(|| AnalysisError::UnknownInstance(r.instance_id.clone()))?;
            by_bucket.entry(label.as_str()).or_default().push(r);
        }
        let rows = labels
            .iter()
            .zip(&sizes)
            .map(|(label, &size)| BucketRow {
                label: label.clone(),
                size,
                row: by_bucket
                    .get_mut(label.as_str())
                    .map(|records| row_for(&system, shots, records)),
            })
            .collect();
        systems.insert(format!("{system}@{shots}"), rows);
    }
    let definition = match bucketing.dimension {
        Dimension::DocCount => "number of input documents".to_string(),
        Dimension::TimeSpan => "days between earliest and latest date in the reference summary".to_string(),
    };
    Ok(BucketReport {
        dimension: bucketing.dimension,
        labels,
        sizes,
        systems,
        definition,
    })
}

/// Aligned binary verdicts of a metric and of human annotators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyInput {
    predicted: Vec<u8>,
    human: Vec<u8>,
}

impl ConsistencyInput {
    pub fn new(predicted: Vec<u8>, human: Vec<u8>) -> Result<Self, AnalysisError> {
        if predicted.len() != human.len() {
            return Err(AnalysisError::LengthMismatch {
                predicted: predicted.len(),
                human: human.len(),
            });
        }
        if predicted.is_empty() {
            return Err(AnalysisError::EmptyInput);
        }
        if let Some(&bad) = predicted.iter().chain(&human).find(|v| **v > 1) {
            return Err(AnalysisError::InvalidVerdict(bad));
        }
        Ok(Self { predicted, human })
    }
}

/// Percentage of positions where the two verdict vectors agree.
pub fn consistency(input: &ConsistencyInput) -> f64 {
    let agree = input.predicted.iter().zip(&input.human).filter(|(a, b)| a == b).count();
    (100 * agree) as f64 / input.predicted.len() as f64
}

/// Metric vs human comparison for one element kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub kind: ElementKind,
    pub elements: usize,
    /// Share of elements judged entailed, in percent.
    pub predicted_recall: f64,
    pub human_recall: f64,
    pub consistency: f64,
}

/// Aligns metric and human verdict dumps on (instance, system, shots, kind,
/// element index) and compares them per kind. Elements present in only one
/// dump are ignored.
pub fn agreement(predicted: &[VerdictRecord], human: &[VerdictRecord]) -> Result<Vec<AgreementRow>, AnalysisError> {
    let key = |v: &VerdictRecord| (v.instance_id.clone(), v.system_id.clone(), v.shots, v.kind, v.index);
    let human_by_key: HashMap<_, u8> = human.iter().map(|v| (key(v), v.entailed)).collect();
    let mut aligned: BTreeMap<ElementKind, (Vec<u8>, Vec<u8>)> = BTreeMap::new();
    for p in predicted {
        if let Some(&h) = human_by_key.get(&key(p)) {
            let entry = aligned.entry(p.kind).or_default();
            entry.0.push(p.entailed);
            entry.1.push(h);
        }
    }
    let mut rows = Vec::new();
    for (kind, (pred, hum)) in aligned {
        let share = |v: &[u8]| (100 * v.iter().filter(|x| **x == 1).count()) as f64 / v.len() as f64;
        let (predicted_recall, human_recall) = (share(&pred), share(&hum));
        let elements = pred.len();
        let c = consistency(&ConsistencyInput::new(pred, hum)?);
        rows.push(AgreementRow {
            kind,
            elements,
            predicted_recall,
            human_recall,
            consistency: c,
        });
    }
    Ok(rows)
}

pub fn render_agreement_tsv(rows: &[AgreementRow]) -> String {
    let mut out = String::from("Metric\tElements\tPredicted\tHuman\tConsistency\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.1}\t{:.1}\t{:.1}",
            r.kind.column(),
            r.elements,
            r.predicted_recall,
            r.human_recall,
            r.consistency
        );
    }
    out
}
