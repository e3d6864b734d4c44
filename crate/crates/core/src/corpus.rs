//! Automatic corpus construction from raw encyclopedia entries.
//!
//! The stages run in order for each entry:
//!
//! 1. [`clean_documents`]: rule-based markup/boilerplate removal and
//!    exact-duplicate removal after normalization.
//! 2. [`filter_by_relevance`]: keep documents whose embedding similarity to
//!    the reference summary is at least the configured threshold.
//! 3. [`assemble_instance`]: reject entries with too few documents and
//!    truncate over-long ones to the most similar documents.
//! 4. [`annotate_temporal`]: attach "before" relations between adjacent
//!    sub-events of the reference.
//!
//! Retrieval itself is outside the crate: [`RawEntry`] records are read from
//! a drop folder of JSON lines.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dates::{extract_dates, parse_loose_date};
use crate::embedding::{EmbeddingProvider, ProviderError};
use crate::hashing::short_id;
use crate::model::{
    instance_violations, transitive_relations, Document, Instance, Split, TemporalOrder, TemporalRelation,
    ValidationFailure,
};
use crate::text::{char_len, collapse_whitespace, normalize_for_dedup, normalize_for_matching, split_sentences};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub similarity_threshold: f64,
    pub min_docs: usize,
    pub max_docs: usize,
    /// Retrieved articles must be published within this many days of the event date.
    pub retrieval_window_days: i64,
    /// At most this many retrieved articles are considered per entry.
    pub retrieval_top_k: usize,
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub split_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: 0.5,
            min_docs: crate::model::MIN_DOCUMENTS,
            max_docs: crate::model::MAX_DOCUMENTS,
            retrieval_window_days: 31,
            retrieval_top_k: 20,
            dev_fraction: 500.0 / 5100.0,
            test_fraction: 585.0 / 5100.0,
            split_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            errs.push(format!(
                "similarity_threshold {} not in [0, 1]",
                self.similarity_threshold
            ));
        }
        if self.min_docs < 1 {
            errs.push("min_docs must be at least 1".to_string());
        }
        if self.min_docs > self.max_docs {
            errs.push(format!("min_docs {} exceeds max_docs {}", self.min_docs, self.max_docs));
        }
        if self.retrieval_window_days < 0 {
            errs.push("retrieval_window_days must be non-negative".to_string());
        }
        for (name, v) in [
            ("dev_fraction", self.dev_fraction),
            ("test_fraction", self.test_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("{name} {v} not in [0, 1]"));
            }
        }
        if self.dev_fraction + self.test_fraction > 1.0 {
            errs.push("dev_fraction + test_fraction exceeds 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    ProviderFailure(#[from] ProviderError),
    #[error("relation annotator failed: {0}")]
    AnnotatorFailure(String),
    #[error("{count} documents exceed max_docs {max} but similarity scores are missing")]
    MissingSimilarityScores { count: usize, max: usize },
    #[error("invalid pipeline config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
}

struct CleaningRules {
    markup: Vec<Regex>,
    boilerplate_line: Regex,
}

fn rules() -> &'static CleaningRules {
    static RULES: OnceLock<CleaningRules> = OnceLock::new();
    RULES.get_or_init(|| CleaningRules {
        markup: [
            r"(?is)<(script|style)[^>]*>.*?</(script|style)>",
            r"<!--.*?-->",
            r"</?[a-zA-Z][^<>]{0,300}>",
            r"&(?:nbsp|amp|lt|gt|quot|apos|#[0-9]{1,6}|#x[0-9a-fA-F]{1,6});",
            r"https?://[^\s\u{4e00}-\u{9fff}]+",
        ]
        .iter()
        .map(|p| Regex::new(p).expect("cleaning pattern compiles"))
        .collect(),
        boilerplate_line: Regex::new(concat!(
            r"^\s*(?:(?:责任编辑|编辑|来源|原标题|免责声明|版权声明|本文来源|图片来源)\s*[:：]",
            r"|返回首页|返回顶部|分享到|点击进入|扫一扫|打开APP|相关阅读|相关新闻|热门推荐|上一篇|下一篇)",
        ))
        .expect("boilerplate pattern compiles"),
    })
}

/// Strips markup remnants and navigation boilerplate and collapses whitespace.
pub fn clean_body(body: &str) -> String {
    let r = rules();
    let mut text = body.to_string();
    for re in &r.markup {
        text = re.replace_all(&text, " ").into_owned();
    }
    let kept: Vec<&str> = text.lines().filter(|line| !r.boilerplate_line.is_match(line)).collect();
    collapse_whitespace(&kept.join(" "))
}

/// Cleans bodies, drops empty documents and removes duplicate bodies.
///
/// Duplicates are bodies that are equal after whitespace collapse and width
/// folding. Of each duplicate group the earliest dated document survives
/// (undated counts as latest, ties keep the first seen). Survivors keep
/// their input order.
pub fn clean_documents(raw: Vec<Document>) -> Vec<Document> {
    let cleaned: Vec<Document> = raw
        .into_iter()
        .filter_map(|mut d| {
            d.body = clean_body(&d.body);
            (!d.body.is_empty()).then_some(d)
        })
        .collect();

    let mut best: HashMap<String, usize> = HashMap::new();
    for (i, d) in cleaned.iter().enumerate() {
        let key = normalize_for_dedup(&d.body);
        match best.get(&key) {
            Some(&j) if !earlier(&d.publish_time, &cleaned[j].publish_time) => {}
            _ => {
                best.insert(key, i);
            }
        }
    }
    let keep: HashSet<usize> = best.into_values().collect();
    cleaned
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, d)| d)
        .collect()
}

fn earlier(a: &Option<NaiveDate>, b: &Option<NaiveDate>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        _ => false,
    }
}

/// A document with the similarity score assigned by the relevance filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDocument {
    pub document: Document,
    pub similarity: Option<f64>,
}

impl ScoredDocument {
    pub fn unscored(document: Document) -> Self {
        Self {
            document,
            similarity: None,
        }
    }
}

/// Keeps documents whose similarity to `reference` is `>= similarity_threshold`.
pub fn filter_by_relevance(
    docs: Vec<Document>,
    reference: &str,
    provider: &dyn EmbeddingProvider,
    config: &PipelineConfig,
) -> Result<Vec<ScoredDocument>, BuildError> {
    if docs.is_empty() {
        return Ok(Vec::new());
    }
    let bodies: Vec<&str> = docs.iter().map(|d| d.body.as_str()).collect();
    let scores = provider.score_against(&bodies, reference)?;
    Ok(docs
        .into_iter()
        .zip(scores)
        .filter(|(_, s)| *s >= config.similarity_threshold)
        .map(|(document, s)| ScoredDocument {
            document,
            similarity: Some(s),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    TooFewDocuments { count: usize, min: usize },
    Invalid(ValidationFailure),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assembly {
    Admitted(Instance),
    Rejected(RejectReason),
}

impl Assembly {
    pub fn instance(self) -> Option<Instance> {
        match self {
            Assembly::Admitted(i) => Some(i),
            Assembly::Rejected(_) => None,
        }
    }
}

/// Wraps filtered documents into an instance, enforcing the document-count bounds.
///
/// Over-long inputs keep the `max_docs` most similar documents (ties broken
/// by input position) in their original order. The instance id is derived
/// from the title.
pub fn assemble_instance(
    title: &str,
    docs: Vec<ScoredDocument>,
    reference: &str,
    config: &PipelineConfig,
) -> Result<Assembly, BuildError> {
    if docs.len() < config.min_docs {
        return Ok(Assembly::Rejected(RejectReason::TooFewDocuments {
            count: docs.len(),
            min: config.min_docs,
        }));
    }
    let documents = if docs.len() > config.max_docs {
        let scores: Option<Vec<f64>> = docs.iter().map(|d| d.similarity).collect();
        let Some(scores) = scores else {
            return Err(BuildError::MissingSimilarityScores {
                count: docs.len(),
                max: config.max_docs,
            });
        };
        let mut order: Vec<usize> = (0..docs.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let keep: HashSet<usize> = order.into_iter().take(config.max_docs).collect();
        docs.into_iter()
            .enumerate()
            .filter(|(i, _)| keep.contains(i))
            .map(|(_, d)| d.document)
            .collect()
    } else {
        docs.into_iter().map(|d| d.document).collect()
    };

    let instance = Instance::new(short_id("ev-", title), title, documents, reference);
    // config bounds may be looser than the schema bounds
    let violations = instance_violations(&instance);
    if violations.is_empty() {
        Ok(Assembly::Admitted(instance))
    } else {
        Ok(Assembly::Rejected(RejectReason::Invalid(ValidationFailure {
            instance_id: instance.instance_id,
            violations,
        })))
    }
}

/// A raw ordered pair as produced by an annotator, before normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedPair {
    pub first: String,
    pub second: String,
    /// Order of `first` relative to `second`.
    pub relation: TemporalOrder,
}

impl AnnotatedPair {
    pub fn new(first: impl Into<String>, second: impl Into<String>, relation: TemporalOrder) -> Self {
        Self {
            first: first.into(),
            second: second.into(),
            relation,
        }
    }
}

/// Labels before/after relations between sub-events of a summary.
pub trait RelationAnnotator: Send + Sync {
    fn annotate(&self, summary: &str) -> Result<Vec<AnnotatedPair>, BuildError>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TemporalStats {
    pub proposed: usize,
    pub stored: usize,
    pub duplicates: usize,
    pub ungrounded: usize,
    pub self_loops: usize,
    pub transitive: usize,
}

/// Runs the annotator on the reference and stores the grounded relations.
///
/// Relations are normalized to "before", deduplicated, and dropped when an
/// endpoint does not occur in the reference (normalized substring match),
/// when both endpoints coincide, or when the pair is implied by a chain of
/// other stored pairs.
pub fn annotate_temporal(
    mut instance: Instance,
    annotator: &dyn RelationAnnotator,
) -> Result<(Instance, TemporalStats), BuildError> {
    let pairs = annotator.annotate(&instance.reference)?;
    let reference = normalize_for_matching(&instance.reference);
    let grounded = |s: &str| {
        let n = normalize_for_matching(s);
        !n.is_empty() && reference.contains(&n)
    };

    let mut stats = TemporalStats {
        proposed: pairs.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    let mut kept = Vec::new();
    for p in pairs {
        let rel = TemporalRelation::ordered(p.first, p.second, p.relation);
        if rel.earlier == rel.later {
            stats.self_loops += 1;
            continue;
        }
        if !grounded(&rel.earlier) || !grounded(&rel.later) {
            stats.ungrounded += 1;
            continue;
        }
        if !seen.insert(rel.clone()) {
            stats.duplicates += 1;
            continue;
        }
        kept.push(rel);
    }
    let implied: HashSet<usize> = transitive_relations(&kept).into_iter().collect();
    stats.transitive = implied.len();
    instance.temporal = kept
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !implied.contains(i))
        .map(|(_, r)| r)
        .collect();
    stats.stored = instance.temporal.len();
    if stats.ungrounded + stats.self_loops + stats.transitive > 0 {
        log::info!(
            "{}: dropped {} ungrounded, {} self-loop, {} transitive temporal relation(s)",
            instance.instance_id,
            stats.ungrounded,
            stats.self_loops,
            stats.transitive
        );
    }
    Ok((instance, stats))
}

const CONNECTIVES: &[&str] = &[
    "随后",
    "此后",
    "之后",
    "其后",
    "紧接着",
    "接着",
    "后来",
    "次日",
    "翌日",
    "第二天",
    "最终",
    "最后",
    "随即",
];

/// Rule-based annotator for offline runs.
///
/// Links two consecutive sentences when the second opens with a sequencing
/// connective (`随后`, `此后`, `次日`, ...) or when both carry explicit dates
/// that differ.
#[derive(Debug, Clone, Default)]
pub struct ConnectiveAnnotator;

impl RelationAnnotator for ConnectiveAnnotator {
    fn annotate(&self, summary: &str) -> Result<Vec<AnnotatedPair>, BuildError> {
        let sentences = split_sentences(summary);
        let mut pairs = Vec::new();
        let mut context: Option<NaiveDate> = None;
        let mut prev_date: Option<NaiveDate> = None;
        for (i, s) in sentences.iter().enumerate() {
            let dates = extract_dates(s, context);
            let date = dates.first().copied();
            if let Some(d) = dates.last() {
                context = Some(*d);
            }
            if i > 0 {
                let prev = &sentences[i - 1];
                let trimmed = s.trim_start_matches(|c: char| c.is_whitespace() || c == '，' || c == ',');
                if CONNECTIVES.iter().any(|c| trimmed.starts_with(c)) {
                    pairs.push(AnnotatedPair::new(prev.clone(), s.clone(), TemporalOrder::Before));
                } else if let (Some(a), Some(b)) = (prev_date, date) {
                    if a < b {
                        pairs.push(AnnotatedPair::new(prev.clone(), s.clone(), TemporalOrder::Before));
                    } else if a > b {
                        pairs.push(AnnotatedPair::new(prev.clone(), s.clone(), TemporalOrder::After));
                    }
                }
            }
            prev_date = date;
        }
        Ok(pairs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawReference {
    #[serde(default)]
    pub url: String,
    pub text: String,
}

/// One encyclopedia entry with its pre-fetched news.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEntry {
    pub title: String,
    #[serde(default)]
    pub card: BTreeMap<String, serde_json::Value>,
    pub description: String,
    #[serde(default)]
    pub references: Vec<RawReference>,
    #[serde(default)]
    pub retrieved: Vec<Document>,
}

const TIME_KEYS: &[&str] = &["time", "时间", "发生时间", "日期"];
const LOCATION_KEYS: &[&str] = &["location", "地点", "发生地点", "地区"];

fn card_field<'a>(card: &'a BTreeMap<String, serde_json::Value>, keys: &[&str]) -> Option<&'a str> {
    keys.iter()
        .filter_map(|k| card.get(*k))
        .filter_map(|v| v.as_str())
        .find(|s| !s.trim().is_empty())
}

impl RawEntry {
    pub fn event_date(&self) -> Option<NaiveDate> {
        card_field(&self.card, TIME_KEYS).and_then(parse_loose_date)
    }

    /// Raw time field when it cannot be parsed.
    fn event_date_raw(&self) -> Option<String> {
        let raw = card_field(&self.card, TIME_KEYS)?;
        parse_loose_date(raw).is_none().then(|| raw.to_string())
    }
}

/// Decides whether an entry describes an event at all.
pub type EntryPredicate = dyn Fn(&RawEntry) -> bool + Send + Sync;

/// Entries whose card carries both a time and a location field.
pub fn has_time_and_location(entry: &RawEntry) -> bool {
    card_field(&entry.card, TIME_KEYS).is_some() && card_field(&entry.card, LOCATION_KEYS).is_some()
}

/// Input documents of an entry: cited references first, then the retrieved
/// articles inside the publication window, capped at `retrieval_top_k`.
pub fn gather_documents(entry: &RawEntry, config: &PipelineConfig) -> Vec<Document> {
    let mut docs: Vec<Document> = entry
        .references
        .iter()
        .map(|r| {
            let key = if r.url.is_empty() { &r.text } else { &r.url };
            let mut d = Document::new(short_id("ref-", key), r.text.clone());
            d.source = r.url.clone();
            d
        })
        .collect();
    let event_date = entry.event_date();
    docs.extend(
        entry
            .retrieved
            .iter()
            .filter(|d| match (event_date, d.publish_time) {
                (Some(e), Some(p)) => (p - e).num_days().abs() <= config.retrieval_window_days,
                _ => true,
            })
            .take(config.retrieval_top_k)
            .cloned(),
    );
    let mut seen = HashMap::<String, usize>::new();
    for d in &mut docs {
        let n = seen.entry(d.doc_id.clone()).or_default();
        *n += 1;
        if *n > 1 {
            d.doc_id = format!("{}#{}", d.doc_id, n);
        }
    }
    docs
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BuildReport {
    pub entries: usize,
    pub non_event: usize,
    pub rejected: Vec<(String, String)>,
    pub admitted: usize,
    pub temporal: TemporalStats,
    pub split_sizes: BTreeMap<String, usize>,
}

/// Runs the full pipeline over raw entries.
pub fn build_instances(
    entries: &[RawEntry],
    config: &PipelineConfig,
    provider: &dyn EmbeddingProvider,
    annotator: &dyn RelationAnnotator,
    is_event: &EntryPredicate,
) -> Result<(Vec<Instance>, BuildReport), BuildError> {
    config.validate().map_err(BuildError::InvalidConfig)?;
    let mut report = BuildReport {
        entries: entries.len(),
        ..Default::default()
    };
    let mut instances: Vec<Instance> = Vec::new();
    let mut used_ids = HashMap::<String, usize>::new();
    for entry in entries {
        if !is_event(entry) {
            report.non_event += 1;
            continue;
        }
        let docs = clean_documents(gather_documents(entry, config));
        let scored = filter_by_relevance(docs, &entry.description, provider, config)?;
        let mut instance = match assemble_instance(&entry.title, scored, &entry.description, config)? {
            Assembly::Admitted(i) => i,
            Assembly::Rejected(reason) => {
                report.rejected.push((entry.title.clone(), describe(&reason)));
                continue;
            }
        };
        let n = used_ids.entry(instance.instance_id.clone()).or_default();
        *n += 1;
        if *n > 1 {
            instance.instance_id = format!("{}-{}", instance.instance_id, n);
        }
        instance.event_date = entry.event_date();
        instance.event_date_raw = entry.event_date_raw();
        instance.card = entry.card.clone();
        let (instance, stats) = annotate_temporal(instance, annotator)?;
        accumulate(&mut report.temporal, &stats);
        instances.push(instance);
    }
    report.admitted = instances.len();
    Ok((instances, report))
}

fn describe(reason: &RejectReason) -> String {
    match reason {
        RejectReason::TooFewDocuments { count, min } => format!("{count} documents after filtering, need {min}"),
        RejectReason::Invalid(f) => f.to_string(),
    }
}

fn accumulate(total: &mut TemporalStats, s: &TemporalStats) {
    total.proposed += s.proposed;
    total.stored += s.stored;
    total.duplicates += s.duplicates;
    total.ungrounded += s.ungrounded;
    total.self_loops += s.self_loops;
    total.transitive += s.transitive;
}

/// Seeded random partition into train/dev/test; each split keeps input order.
pub fn assign_splits(instances: Vec<Instance>, config: &PipelineConfig) -> BTreeMap<Split, Vec<Instance>> {
    let n = instances.len();
    let n_test = (n as f64 * config.test_fraction).round() as usize;
    let n_dev = ((n as f64 * config.dev_fraction).round() as usize).min(n - n_test.min(n));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.split_seed));
    let mut split_of = vec![Split::Train; n];
    for (rank, &i) in order.iter().enumerate() {
        split_of[i] = if rank < n_test {
            Split::Test
        } else if rank < n_test + n_dev {
            Split::Dev
        } else {
            Split::Train
        };
    }
    let mut out: BTreeMap<Split, Vec<Instance>> = Split::ALL.iter().map(|s| (*s, Vec::new())).collect();
    for (inst, split) in instances.into_iter().zip(split_of) {
        out.get_mut(&split).expect("all splits present").push(inst);
    }
    out
}

/// Reads every `*.jsonl` file of a drop folder, in file-name order.
pub fn read_raw_entries(dir: &Path) -> Result<Vec<RawEntry>, crate::model::CorpusError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| crate::model::CorpusError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        out.extend(crate::model::read_jsonl::<RawEntry>(&f)?);
    }
    Ok(out)
}

/// Summary statistics of a loaded corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub instances: usize,
    pub documents: usize,
    pub mean_docs: f64,
    pub mean_input_chars: f64,
    pub mean_reference_chars: f64,
}

pub fn corpus_stats(instances: &[Instance]) -> CorpusStats {
    let n = instances.len();
    let documents: usize = instances.iter().map(|i| i.documents.len()).sum();
    let input: usize = instances.iter().map(Instance::input_chars).sum();
    let refs: usize = instances.iter().map(|i| char_len(&i.reference)).sum();
    let mean = |total: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    CorpusStats {
        instances: n,
        documents,
        mean_docs: mean(documents),
        mean_input_chars: mean(input),
        mean_reference_chars: mean(refs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn doc(id: &str, body: &str) -> Document {
        Document::new(id, body)
    }

    #[test]
    fn cleaning_collapses_whitespace_and_drops_empty() {
        let out = clean_documents(vec![doc("a", "  正文  正文"), doc("b", "")]);
        assert_eq!(out, vec![doc("a", "正文 正文")]);
    }

    #[test]
    fn duplicates_keep_earliest_date() {
        let jan = |d| NaiveDate::from_ymd_opt(2024, 1, d).unwrap();
        let out = clean_documents(vec![
            doc("late", "同一篇报道").with_publish_time(jan(3)),
            doc("early", "同一篇报道").with_publish_time(jan(1)),
        ]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].doc_id, "early");
        assert_eq!(out[0].publish_time, Some(jan(1)));
    }

    #[test]
    fn duplicates_detected_after_width_folding() {
        let out = clean_documents(vec![doc("a", "２９人遇难，"), doc("b", "29人遇难,")]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].doc_id, "a");
    }

    #[test]
    fn markup_only_bodies_are_removed() {
        let out = clean_documents(vec![
            doc("a", "<div class=\"nav\"></div><br/>&nbsp;"),
            doc("b", "<script>var x = 1;</script>\n责任编辑：张三\n分享到微博"),
            doc("c", "<p>暴雨来袭</p>https://example.com/a.html"),
        ]);
        assert_eq!(out, vec![doc("c", "暴雨来袭")]);
    }

    /// Provider whose similarity to the anchor is read from a table keyed by text.
    struct TableProvider(HashMap<String, f64>);

    impl EmbeddingProvider for TableProvider {
        fn name(&self) -> String {
            "table".into()
        }
        fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, ProviderError> {
            Ok(texts.iter().map(|_| vec![1.0]).collect())
        }
        fn score_against(&self, texts: &[&str], _anchor: &str) -> Result<Vec<f64>, ProviderError> {
            Ok(texts.iter().map(|t| self.0[*t]).collect())
        }
    }

    #[test]
    fn boundary_similarity_is_kept() {
        let p = TableProvider(HashMap::from([("A".to_string(), 0.49), ("B".to_string(), 0.50)]));
        let kept = filter_by_relevance(
            vec![doc("a", "A"), doc("b", "B")],
            "ref",
            &p,
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].document.doc_id, "b");
        assert_eq!(kept[0].similarity, Some(0.5));
    }

    #[test]
    fn identical_body_is_kept_with_real_embedder() {
        let e = crate::embedding::HashedNgramEmbedder::default();
        let kept = filter_by_relevance(
            vec![doc("a", "河北遭遇强降雨")],
            "河北遭遇强降雨",
            &e,
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(kept.len(), 1);
        assert!((kept[0].similarity.unwrap() - 1.0).abs() < 1e-9);
    }

    struct Failing;
    impl EmbeddingProvider for Failing {
        fn name(&self) -> String {
            "down".into()
        }
        fn embed(&self, _: &[&str]) -> Result<Vec<Vec<f32>>, ProviderError> {
            Err(ProviderError("connection refused".into()))
        }
    }

    #[test]
    fn provider_failure_propagates() {
        let r = filter_by_relevance(vec![doc("a", "x")], "r", &Failing, &PipelineConfig::default());
        assert!(matches!(r, Err(BuildError::ProviderFailure(_))));
    }

    fn scored(n: usize) -> Vec<ScoredDocument> {
        (0..n)
            .map(|i| ScoredDocument {
                document: doc(&format!("d{i}"), &format!("正文{i}")),
                similarity: Some(0.5 + i as f64 / 100.0),
            })
            .collect()
    }

    #[test]
    fn assemble_bounds() {
        let c = PipelineConfig::default();
        assert_eq!(
            assemble_instance("t", scored(4), "r", &c).unwrap(),
            Assembly::Rejected(RejectReason::TooFewDocuments { count: 4, min: 5 })
        );
        let inst = assemble_instance("t", scored(12), "r", &c).unwrap().instance().unwrap();
        assert_eq!(inst.documents.len(), 12);
        assert!(inst.temporal.is_empty());
    }

    #[test]
    fn truncation_requires_scores() {
        let docs: Vec<ScoredDocument> = (0..21)
            .map(|i| ScoredDocument::unscored(doc(&format!("d{i}"), "x")))
            .collect();
        assert!(matches!(
            assemble_instance("t", docs, "r", &PipelineConfig::default()),
            Err(BuildError::MissingSimilarityScores { count: 21, max: 20 })
        ));
    }

    #[test]
    fn empty_reference_is_rejected() {
        let r = assemble_instance("t", scored(6), " ", &PipelineConfig::default()).unwrap();
        assert!(matches!(r, Assembly::Rejected(RejectReason::Invalid(_))));
    }

    struct Fixed(Vec<AnnotatedPair>);
    impl RelationAnnotator for Fixed {
        fn annotate(&self, _: &str) -> Result<Vec<AnnotatedPair>, BuildError> {
            Ok(self.0.clone())
        }
    }

    fn instance_with_reference(reference: &str) -> Instance {
        Instance::new(
            "i",
            "t",
            (0..5).map(|i| doc(&format!("d{i}"), "x")).collect(),
            reference,
        )
    }

    #[test]
    fn after_is_normalized_to_before() {
        let inst = instance_with_reference("甲事件发生。乙事件发生。");
        let ann = Fixed(vec![AnnotatedPair::new(
            "乙事件发生。",
            "甲事件发生。",
            TemporalOrder::After,
        )]);
        let (inst, stats) = annotate_temporal(inst, &ann).unwrap();
        assert_eq!(
            inst.temporal,
            vec![TemporalRelation::before("甲事件发生。", "乙事件发生。")]
        );
        assert_eq!(inst.temporal[0].relation(), TemporalOrder::Before);
        assert_eq!(stats.stored, 1);
    }

    #[test]
    fn duplicate_pairs_stored_once() {
        let inst = instance_with_reference("甲。乙。");
        let p = AnnotatedPair::new("甲", "乙", TemporalOrder::Before);
        let (inst, stats) = annotate_temporal(inst, &Fixed(vec![p.clone(), p])).unwrap();
        assert_eq!(inst.temporal.len(), 1);
        assert_eq!(stats.duplicates, 1);
    }

    #[test]
    fn ungrounded_pairs_dropped_and_counted() {
        let inst = instance_with_reference("甲。乙。");
        let ann = Fixed(vec![
            AnnotatedPair::new("甲", "乙", TemporalOrder::Before),
            AnnotatedPair::new("甲", "丙", TemporalOrder::Before),
        ]);
        let (inst, stats) = annotate_temporal(inst, &ann).unwrap();
        assert_eq!(inst.temporal.len(), 1);
        assert_eq!(stats.ungrounded, 1);
    }

    #[test]
    fn grounding_folds_width_and_whitespace() {
        let inst = instance_with_reference("２９人遇难， 道路中断。");
        let ann = Fixed(vec![AnnotatedPair::new(
            "29人遇难,",
            "道路中断.",
            TemporalOrder::Before,
        )]);
        let (inst, _) = annotate_temporal(inst, &ann).unwrap();
        assert_eq!(inst.temporal.len(), 1);
    }

    #[test]
    fn connective_annotator_links_adjacent_sentences() {
        let pairs = ConnectiveAnnotator
            .annotate("2023年7月29日河北遭遇暴雨。随后多地发布预警。8月1日暴雨停止。")
            .unwrap();
        assert_eq!(
            pairs,
            vec![AnnotatedPair::new(
                "2023年7月29日河北遭遇暴雨。",
                "随后多地发布预警。",
                TemporalOrder::Before
            ),]
        );
        let pairs = ConnectiveAnnotator
            .annotate("2023年8月1日暴雨停止。2023年7月29日暴雨开始。")
            .unwrap();
        assert_eq!(pairs[0].relation, TemporalOrder::After);
    }

    #[test]
    fn config_validation() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.similarity_threshold = 1.5;
        c.min_docs = 30;
        assert_eq!(c.validate().unwrap_err().len(), 2);
    }

    #[test]
    fn event_predicate_needs_time_and_location() {
        let mut e = RawEntry {
            title: "t".into(),
            card: BTreeMap::new(),
            description: "d".into(),
            references: vec![],
            retrieved: vec![],
        };
        assert!(!has_time_and_location(&e));
        e.card.insert("时间".into(), "2023年7月29日".into());
        e.card.insert("地点".into(), "河北".into());
        assert!(has_time_and_location(&e));
        assert_eq!(e.event_date(), NaiveDate::from_ymd_opt(2023, 7, 29));
    }

    #[test]
    fn retrieval_window_and_top_k() {
        let day = |d| NaiveDate::from_ymd_opt(2023, 7, d).unwrap();
        let mut card = BTreeMap::new();
        card.insert("time".to_string(), serde_json::Value::from("2023-07-01"));
        let e = RawEntry {
            title: "t".into(),
            card,
            description: "d".into(),
            references: vec![RawReference {
                url: "u1".into(),
                text: "引用".into(),
            }],
            retrieved: vec![
                doc("r1", "a").with_publish_time(day(2)),
                doc("r2", "b").with_publish_time(NaiveDate::from_ymd_opt(2023, 9, 1).unwrap()),
                doc("r3", "c"),
                doc("r4", "d").with_publish_time(day(20)),
            ],
        };
        let c = PipelineConfig {
            retrieval_top_k: 2,
            ..Default::default()
        };
        let ids: Vec<String> = gather_documents(&e, &c).into_iter().map(|d| d.doc_id).collect();
        assert_eq!(ids.len(), 3);
        assert_eq!(&ids[1..], ["r1", "r3"]);
    }

    #[test]
    fn splits_partition_and_are_seeded() {
        let insts: Vec<Instance> = (0..100)
            .map(|i| Instance::new(format!("i{i}"), "t", vec![], "r"))
            .collect();
        let c = PipelineConfig {
            dev_fraction: 0.1,
            test_fraction: 0.2,
            ..Default::default()
        };
        let a = assign_splits(insts.clone(), &c);
        let b = assign_splits(insts, &c);
        assert_eq!(a, b);
        assert_eq!(a[&Split::Test].len(), 20);
        assert_eq!(a[&Split::Dev].len(), 10);
        assert_eq!(a[&Split::Train].len(), 70);
    }
}
