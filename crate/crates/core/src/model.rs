//! Corpus schema: documents, instances, annotations and generated summaries.
//!
//! An [`Instance`] is one dynamic event: the input documents, the reference
//! summary (automatic or human-written), the temporal relations annotated on
//! the reference, and, for human-annotated instances, the global structured
//! annotation (sub-events, arguments, causal links).
//!
//! Records are stored as JSON lines. Calendar dates are ISO-8601
//! (`YYYY-MM-DD`); a date that fails to parse is kept verbatim in a
//! `*_raw` sidecar field and the typed field is left empty.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower bound on the number of input documents of an admitted instance.
pub const MIN_DOCUMENTS: usize = 5;
/// Upper bound on the number of input documents of an admitted instance.
pub const MAX_DOCUMENTS: usize = 20;

/// One input news article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "DocumentRecord", into = "DocumentRecord")]
pub struct Document {
    pub doc_id: String,
    pub source: String,
    pub title: String,
    pub publish_time: Option<NaiveDate>,
    /// Unparseable publish time as found in the input.
    pub publish_time_raw: Option<String>,
    pub body: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            source: String::new(),
            title: String::new(),
            publish_time: None,
            publish_time_raw: None,
            body: body.into(),
        }
    }

    pub fn with_publish_time(mut self, date: NaiveDate) -> Self {
        self.publish_time = Some(date);
        self.publish_time_raw = None;
        self
    }
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    doc_id: String,
    #[serde(default)]
    source: String,
    #[serde(default)]
    title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    publish_time: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    publish_time_raw: Option<String>,
    body: String,
}

impl From<DocumentRecord> for Document {
    fn from(r: DocumentRecord) -> Self {
        let (publish_time, raw) = parse_date_field(r.publish_time, r.publish_time_raw);
        Self {
            doc_id: r.doc_id,
            source: r.source,
            title: r.title,
            publish_time,
            publish_time_raw: raw,
            body: r.body,
        }
    }
}

impl From<Document> for DocumentRecord {
    fn from(d: Document) -> Self {
        Self {
            doc_id: d.doc_id,
            source: d.source,
            title: d.title,
            publish_time: d.publish_time.map(|t| t.format("%Y-%m-%d").to_string()),
            publish_time_raw: d.publish_time_raw,
            body: d.body,
        }
    }
}

/// Parses an ISO-8601 calendar date, also accepting a trailing time part
/// (`2023-07-29T08:00:00`, `2023-07-29 08:00`).
pub fn parse_iso_date(text: &str) -> Option<NaiveDate> {
    let t = text.trim();
    let head = t.get(..10).unwrap_or(t);
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

fn parse_date_field(value: Option<String>, raw: Option<String>) -> (Option<NaiveDate>, Option<String>) {
    match value {
        Some(v) => match parse_iso_date(&v) {
            Some(d) => (Some(d), raw),
            None if v.trim().is_empty() => (None, raw),
            None => (None, Some(v)),
        },
        None => (None, raw),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Encyclopedia description used as-is.
    Auto,
    /// Manually written replacement summary.
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalOrder {
    Before,
    After,
}

/// A "before" relation between two directly adjacent sub-event sentences.
///
/// Relations are always stored in canonical direction: `earlier` happens
/// before `later`. A record read with `relation = "after"` states that its
/// first sentence follows its second one and is swapped on ingest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "TemporalRecord")]
pub struct TemporalRelation {
    pub earlier: String,
    pub later: String,
    relation: TemporalOrder,
}

#[derive(Deserialize)]
struct TemporalRecord {
    earlier: String,
    later: String,
    #[serde(default = "default_before")]
    relation: TemporalOrder,
}

fn default_before() -> TemporalOrder {
    TemporalOrder::Before
}

impl From<TemporalRecord> for TemporalRelation {
    fn from(r: TemporalRecord) -> Self {
        TemporalRelation::ordered(r.earlier, r.later, r.relation)
    }
}

impl TemporalRelation {
    pub fn before(earlier: impl Into<String>, later: impl Into<String>) -> Self {
        Self {
            earlier: earlier.into(),
            later: later.into(),
            relation: TemporalOrder::Before,
        }
    }

    /// Builds the canonical relation for "`first` <order> `second`".
    pub fn ordered(first: impl Into<String>, second: impl Into<String>, order: TemporalOrder) -> Self {
        match order {
            TemporalOrder::Before => Self::before(first, second),
            TemporalOrder::After => Self::before(second, first),
        }
    }

    /// Always [`TemporalOrder::Before`].
    pub fn relation(&self) -> TemporalOrder {
        self.relation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgumentRole {
    Time,
    Location,
    Person,
    Organization,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Argument {
    pub text: String,
    pub role: ArgumentRole,
    /// Alternative mentions: abbreviations, pronouns, short names.
    #[serde(default)]
    pub corefs: Vec<String>,
}

impl Argument {
    pub fn new(text: impl Into<String>, role: ArgumentRole) -> Self {
        Self {
            text: text.into(),
            role,
            corefs: Vec::new(),
        }
    }

    pub fn with_corefs<I, S>(mut self, corefs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.corefs = corefs.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalKind {
    /// Sufficient condition.
    Cause,
    /// Necessary condition.
    Precondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalRelation {
    pub cause_sentence: String,
    pub effect_sentence: String,
    pub kind: CausalKind,
}

impl CausalRelation {
    pub fn new(cause: impl Into<String>, effect: impl Into<String>, kind: CausalKind) -> Self {
        Self {
            cause_sentence: cause.into(),
            effect_sentence: effect.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalAnnotation {
    #[serde(default)]
    pub sub_events: Vec<String>,
    #[serde(default)]
    pub arguments: Vec<Argument>,
    #[serde(default)]
    pub causal: Vec<CausalRelation>,
}

impl GlobalAnnotation {
    pub fn is_empty(&self) -> bool {
        self.sub_events.is_empty() && self.arguments.is_empty() && self.causal.is_empty()
    }
}

/// One dynamic event with its input documents and reference summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "InstanceRecord", into = "InstanceRecord")]
pub struct Instance {
    pub instance_id: String,
    pub event_title: String,
    pub documents: Vec<Document>,
    pub reference: String,
    pub reference_kind: ReferenceKind,
    pub temporal: Vec<TemporalRelation>,
    pub global_annotation: Option<GlobalAnnotation>,
    pub event_date: Option<NaiveDate>,
    pub event_date_raw: Option<String>,
    /// Basic-information card of the source entry; kept opaque.
    pub card: BTreeMap<String, serde_json::Value>,
}

impl Instance {
    pub fn new(
        instance_id: impl Into<String>,
        event_title: impl Into<String>,
        documents: Vec<Document>,
        reference: impl Into<String>,
    ) -> Self {
        Self {
            instance_id: instance_id.into(),
            event_title: event_title.into(),
            documents,
            reference: reference.into(),
            reference_kind: ReferenceKind::Auto,
            temporal: Vec::new(),
            global_annotation: None,
            event_date: None,
            event_date_raw: None,
            card: BTreeMap::new(),
        }
    }

    /// Total characters across all document bodies.
    pub fn input_chars(&self) -> usize {
        self.documents.iter().map(|d| crate::text::char_len(&d.body)).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    instance_id: String,
    #[serde(default)]
    event_title: String,
    documents: Vec<Document>,
    reference: String,
    #[serde(default = "default_reference_kind")]
    reference_kind: ReferenceKind,
    #[serde(default)]
    temporal: Vec<TemporalRelation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    global_annotation: Option<GlobalAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    event_date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    event_date_raw: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    card: BTreeMap<String, serde_json::Value>,
}

fn default_reference_kind() -> ReferenceKind {
    ReferenceKind::Auto
}

impl From<InstanceRecord> for Instance {
    fn from(r: InstanceRecord) -> Self {
        let (event_date, event_date_raw) = parse_date_field(r.event_date, r.event_date_raw);
        Self {
            instance_id: r.instance_id,
            event_title: r.event_title,
            documents: r.documents,
            reference: r.reference,
            reference_kind: r.reference_kind,
            temporal: r.temporal,
            global_annotation: r.global_annotation,
            event_date,
            event_date_raw,
            card: r.card,
        }
    }
}

impl From<Instance> for InstanceRecord {
    fn from(i: Instance) -> Self {
        Self {
            instance_id: i.instance_id,
            event_title: i.event_title,
            documents: i.documents,
            reference: i.reference,
            reference_kind: i.reference_kind,
            temporal: i.temporal,
            global_annotation: i.global_annotation,
            event_date: i.event_date.map(|d| d.format("%Y-%m-%d").to_string()),
            event_date_raw: i.event_date_raw,
            card: i.card,
        }
    }
}

/// A system output for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedSummary {
    pub instance_id: String,
    pub system_id: String,
    pub text: String,
    #[serde(default)]
    pub shots: u32,
}

impl GeneratedSummary {
    pub fn key(&self) -> PredictionKey {
        PredictionKey {
            instance_id: self.instance_id.clone(),
            system_id: self.system_id.clone(),
            shots: self.shots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredictionKey {
    pub instance_id: String,
    pub system_id: String,
    pub shots: u32,
}

impl fmt::Display for PredictionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}-shot", self.system_id, self.instance_id, self.shots)
    }
}

/// One broken invariant of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("document count {count} outside [{min}, {max}]")]
    DocumentCountOutOfRange { count: usize, min: usize, max: usize },
    #[error("reference summary is empty")]
    EmptyReference,
    #[error("document {doc_id:?} has an empty body")]
    EmptyDocumentBody { doc_id: String },
    #[error("document id {doc_id:?} appears more than once")]
    DuplicateDocId { doc_id: String },
    #[error("global annotation present on an automatic reference")]
    AnnotationOnAutoReference,
    #[error("temporal relation {index} links a sentence to itself")]
    SelfTemporalRelation { index: usize },
    #[error("temporal relation {index} is implied transitively by other stored relations")]
    TransitiveTemporalRelation { index: usize },
    #[error("sub-event {sentence:?} is listed more than once")]
    DuplicateSubEvent { sentence: String },
    #[error("argument {index} has empty text")]
    EmptyArgument { index: usize },
    #[error("argument {index} lists its own text among its corefs")]
    CorefRepeatsArgument { index: usize },
    #[error("causal relation {index} links a sentence to itself")]
    SelfCausalRelation { index: usize },
    #[error("causal relation {index} endpoint {sentence:?} is not a sub-event")]
    DanglingCausalEndpoint { index: usize, sentence: String },
}

/// Every violated invariant of one candidate instance.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("instance {instance_id:?} violates {} invariant(s): {}", violations.len(), join_violations(violations))]
pub struct ValidationFailure {
    pub instance_id: String,
    pub violations: Vec<Violation>,
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Checks every instance invariant and reports all violations together.
pub fn validate_instance(candidate: Instance) -> Result<Instance, ValidationFailure> {
    let violations = instance_violations(&candidate);
    if violations.is_empty() {
        Ok(candidate)
    } else {
        Err(ValidationFailure {
            instance_id: candidate.instance_id,
            violations,
        })
    }
}

pub fn instance_violations(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();

    let count = instance.documents.len();
    if !(MIN_DOCUMENTS..=MAX_DOCUMENTS).contains(&count) {
        out.push(Violation::DocumentCountOutOfRange {
            count,
            min: MIN_DOCUMENTS,
            max: MAX_DOCUMENTS,
        });
    }
    if instance.reference.trim().is_empty() {
        out.push(Violation::EmptyReference);
    }

    let mut seen_ids = HashSet::new();
    let mut reported_ids = HashSet::new();
    for doc in &instance.documents {
        if doc.body.trim().is_empty() {
            out.push(Violation::EmptyDocumentBody {
                doc_id: doc.doc_id.clone(),
            });
        }
        if !seen_ids.insert(doc.doc_id.as_str()) && reported_ids.insert(doc.doc_id.as_str()) {
            out.push(Violation::DuplicateDocId {
                doc_id: doc.doc_id.clone(),
            });
        }
    }

    for (index, rel) in instance.temporal.iter().enumerate() {
        if rel.earlier == rel.later {
            out.push(Violation::SelfTemporalRelation { index });
        }
    }
    for index in transitive_relations(&instance.temporal) {
        out.push(Violation::TransitiveTemporalRelation { index });
    }

    if let Some(g) = &instance.global_annotation {
        if instance.reference_kind != ReferenceKind::Human {
            out.push(Violation::AnnotationOnAutoReference);
        }
        let mut seen = HashSet::new();
        let mut reported = HashSet::new();
        for s in &g.sub_events {
            if !seen.insert(s.as_str()) && reported.insert(s.as_str()) {
                out.push(Violation::DuplicateSubEvent { sentence: s.clone() });
            }
        }
        for (index, arg) in g.arguments.iter().enumerate() {
            if arg.text.trim().is_empty() {
                out.push(Violation::EmptyArgument { index });
            }
            if arg.corefs.iter().any(|c| c == &arg.text) {
                out.push(Violation::CorefRepeatsArgument { index });
            }
        }
        for (index, rel) in g.causal.iter().enumerate() {
            if rel.cause_sentence == rel.effect_sentence {
                out.push(Violation::SelfCausalRelation { index });
            }
            for endpoint in [&rel.cause_sentence, &rel.effect_sentence] {
                if !seen.contains(endpoint.as_str()) {
                    out.push(Violation::DanglingCausalEndpoint {
                        index,
                        sentence: endpoint.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Indices of relations `a → c` where `c` is also reachable from `a`
/// through the other stored relations.
pub(crate) fn transitive_relations(relations: &[TemporalRelation]) -> Vec<usize> {
    let mut edges: HashMap<&str, Vec<(usize, &str)>> = HashMap::new();
    for (i, r) in relations.iter().enumerate() {
        edges.entry(r.earlier.as_str()).or_default().push((i, r.later.as_str()));
    }
    (0..relations.len())
        .filter(|&skip| {
            let target = relations[skip].later.as_str();
            let mut stack = vec![relations[skip].earlier.as_str()];
            let mut visited = HashSet::new();
            while let Some(node) = stack.pop() {
                if !visited.insert(node) {
                    continue;
                }
                for &(i, next) in edges.get(node).map(Vec::as_slice).unwrap_or(&[]) {
                    if i == skip || relations[i] == relations[skip] {
                        continue;
                    }
                    if next == target {
                        return true;
                    }
                    stack.push(next);
                }
            }
            false
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.jsonl", self.as_str())
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" | "validation" | "valid" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(CorpusError::UnknownSplit(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {reason}")]
    MalformedRecord { path: String, line: usize, reason: String },
    #[error("unknown split {0:?} (expected train, dev or test)")]
    UnknownSplit(String),
    #[error("duplicate prediction key {0}")]
    DuplicatePrediction(PredictionKey),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Reads a JSONL file into typed records, naming the first bad line.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            path: path.display().to_string(),
            line: idx + 1,
            reason: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Writes records as canonical JSON lines (struct field order, `\n` endings).
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CorpusError> {
    let mut file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("record serialization is infallible");
        buf.push(b'\n');
    }
    file.write_all(&buf).map_err(|e| CorpusError::io(path, e))?;
    Ok(())
}

/// Canonical single-line JSON of one record.
pub fn to_json_line<T: Serialize>(record: &T) -> String {
    serde_json::to_string(record).expect("record serialization is infallible")
}

/// Loads and validates every instance of a corpus file, in file order.
pub fn load_instances(path: &Path) -> Result<Vec<Instance>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| CorpusError::MalformedRecord {
            path: path.display().to_string(),
            line: idx + 1,
            reason,
        };
        let candidate: Instance = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let instance = validate_instance(candidate).map_err(|e| malformed(e.to_string()))?;
        out.push(instance);
    }
    Ok(out)
}

/// Loads `<dir>/<split>.jsonl`.
pub fn load_corpus(dir: &Path, split: Split) -> Result<Vec<Instance>, CorpusError> {
    load_instances(&dir.join(split.file_name()))
}

/// Loads a corpus given either a split file or a corpus directory plus split.
pub fn load_corpus_path(path: &Path, split: Split) -> Result<Vec<Instance>, CorpusError> {
    if path.is_dir() {
        load_corpus(path, split)
    } else {
        load_instances(path)
    }
}

/// Loads a predictions file, rejecting duplicate (instance, system, shots) keys.
pub fn load_predictions(path: &Path) -> Result<Vec<GeneratedSummary>, CorpusError> {
    let records: Vec<GeneratedSummary> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(r.key()) {
            return Err(CorpusError::DuplicatePrediction(r.key()));
        }
    }
    Ok(records)
}
