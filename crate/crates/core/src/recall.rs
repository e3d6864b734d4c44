//! Key-element recall: Event, Argument, Causal and Temporal Recall.
//!
//! For one element kind `k`, with annotated elements `E_k` and summary `s`:
//!
//! ```text
//! Recall_k = Σ_{e ∈ E_k} Γ(e, s) / |E_k|
//! ```
//!
//! where `Γ(e, s) ∈ {0, 1}` is an entailment [`Discriminator`] deciding
//! whether element `e` can be inferred from `s`. Relation elements are first
//! rendered into a sentence with fixed templates ([`render_element`]). An
//! empty `E_k` yields [`RecallOutcome::Absent`], never a number.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Argument, CausalKind, CausalRelation, GeneratedSummary, Instance, TemporalRelation};
use crate::text::normalize_for_matching;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Event,
    Argument,
    Causal,
    Temporal,
}

impl ElementKind {
    pub const ALL: [ElementKind; 4] = [
        ElementKind::Event,
        ElementKind::Argument,
        ElementKind::Causal,
        ElementKind::Temporal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Event => "event",
            ElementKind::Argument => "argument",
            ElementKind::Causal => "causal",
            ElementKind::Temporal => "temporal",
        }
    }

    /// Report column label (ER, AR, CR, TR).
    pub fn column(self) -> &'static str {
        match self {
            ElementKind::Event => "ER",
            ElementKind::Argument => "AR",
            ElementKind::Causal => "CR",
            ElementKind::Temporal => "TR",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ElementKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown element kind {s:?} (expected event, argument, causal or temporal)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementPayload {
    Sentence(String),
    Argument(Argument),
    Causal(CausalRelation),
    Temporal(TemporalRelation),
}

impl ElementPayload {
    pub fn kind(&self) -> ElementKind {
        match self {
            ElementPayload::Sentence(_) => ElementKind::Event,
            ElementPayload::Argument(_) => ElementKind::Argument,
            ElementPayload::Causal(_) => ElementKind::Causal,
            ElementPayload::Temporal(_) => ElementKind::Temporal,
        }
    }
}

/// One annotated element with its rendered text.
///
/// The kind is derived from the payload, so the two always agree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyElement {
    pub payload: ElementPayload,
    pub rendered: String,
}

impl KeyElement {
    pub fn new(payload: ElementPayload) -> Self {
        let rendered = render_element(&payload);
        Self { payload, rendered }
    }

    pub fn event(sentence: impl Into<String>) -> Self {
        Self::new(ElementPayload::Sentence(sentence.into()))
    }

    pub fn kind(&self) -> ElementKind {
        self.payload.kind()
    }

    /// Alternative surface forms accepted for this element (argument corefs).
    pub fn alternatives(&self) -> &[String] {
        match &self.payload {
            ElementPayload::Argument(a) => &a.corefs,
            _ => &[],
        }
    }
}

fn trim_terminal(s: &str) -> &str {
    s.trim()
        .trim_end_matches(['。', '.', '！', '!', '？', '?', '；', ';', '，', ','])
}

/// Renders an element as the natural-language text checked for entailment.
///
/// * event: the sentence itself
/// * argument: its surface form
/// * causal: `因为{cause}，所以{effect}` or `{cause}，在此前提下{effect}`
/// * temporal: `{earlier}。随后，{later}`
pub fn render_element(payload: &ElementPayload) -> String {
    match payload {
        ElementPayload::Sentence(s) => s.clone(),
        ElementPayload::Argument(a) => a.text.clone(),
        ElementPayload::Causal(c) => match c.kind {
            CausalKind::Cause => format!(
                "因为{}，所以{}",
                trim_terminal(&c.cause_sentence),
                c.effect_sentence.trim()
            ),
            CausalKind::Precondition => {
                format!(
                    "{}，在此前提下{}",
                    trim_terminal(&c.cause_sentence),
                    c.effect_sentence.trim()
                )
            }
        },
        ElementPayload::Temporal(t) => format!("{}。随后，{}", trim_terminal(&t.earlier), t.later.trim()),
    }
}

/// Elements of a single kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyElementSet {
    kind: ElementKind,
    elements: Vec<KeyElement>,
}

impl KeyElementSet {
    pub fn new(kind: ElementKind, elements: Vec<KeyElement>) -> Result<Self, RecallError> {
        if let Some(e) = elements.iter().find(|e| e.kind() != kind) {
            return Err(RecallError::MixedKinds {
                expected: kind,
                found: e.kind(),
            });
        }
        Ok(Self { kind, elements })
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn elements(&self) -> &[KeyElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct DiscriminatorError(pub String);

/// Entailment judge Γ(e, s): does the summary entail the element?
///
/// The summary plays the premise role and the rendered element the
/// hypothesis. Verdicts must be deterministic for a given pair within a run.
pub trait Discriminator: Send + Sync {
    /// Backend identity recorded alongside scores.
    fn name(&self) -> String;

    fn judge(&self, summary: &str, element: &KeyElement) -> Result<bool, DiscriminatorError>;

    /// Maximum number of concurrent `judge` calls the backend tolerates.
    fn max_in_flight(&self) -> usize {
        1
    }
}

/// Substring-based discriminator for tests and offline runs.
///
/// Judges 1 iff the normalized element text, or for arguments any coref
/// mention, occurs in the normalized summary. Normalization strips
/// whitespace and folds punctuation width; numerals are not converted
/// between writing systems.
#[derive(Debug, Clone, Copy, Default)]
pub struct ContainmentOracle;

pub fn containment_oracle() -> ContainmentOracle {
    ContainmentOracle
}

impl ContainmentOracle {
    pub fn contains(summary: &str, text: &str) -> bool {
        let needle = normalize_for_matching(text);
        !needle.is_empty() && normalize_for_matching(summary).contains(&needle)
    }
}

impl Discriminator for ContainmentOracle {
    fn name(&self) -> String {
        "containment".into()
    }

    fn judge(&self, summary: &str, element: &KeyElement) -> Result<bool, DiscriminatorError> {
        Ok(Self::contains(summary, &element.rendered)
            || element.alternatives().iter().any(|alt| Self::contains(summary, alt)))
    }

    fn max_in_flight(&self) -> usize {
        usize::MAX
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementVerdict {
    pub element: KeyElement,
    pub entailed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallResult {
    pub kind: ElementKind,
    pub entailed: usize,
    pub total: usize,
    pub recall: f64,
    pub per_element: Vec<ElementVerdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsenceReason {
    /// The instance carries no annotation of this kind at all.
    MissingAnnotation,
    /// The annotation exists but lists no element of this kind.
    EmptyElementSet,
}

/// Recall for one kind, or why it is undefined.
#[derive(Debug, Clone, PartialEq)]
pub enum RecallOutcome {
    Present(RecallResult),
    Absent(AbsenceReason),
}

impl RecallOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            RecallOutcome::Present(r) => Some(r.recall),
            RecallOutcome::Absent(_) => None,
        }
    }

    pub fn result(&self) -> Option<&RecallResult> {
        match self {
            RecallOutcome::Present(r) => Some(r),
            RecallOutcome::Absent(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecallError {
    #[error("summary for {0} is empty")]
    EmptySummary(String),
    #[error("discriminator failed on {kind} element {index} ({element:?}): {source}")]
    DiscriminatorFailure {
        kind: ElementKind,
        index: usize,
        element: String,
        #[source]
        source: DiscriminatorError,
    },
    #[error("element set of kind {expected} contains a {found} element")]
    MixedKinds { expected: ElementKind, found: ElementKind },
}

/// Recall of one element set against one summary, judging sequentially.
pub fn recall_for_kind(
    elements: &KeyElementSet,
    summary: &GeneratedSummary,
    discriminator: &dyn Discriminator,
) -> Result<RecallOutcome, RecallError> {
    recall_for_kind_with_jobs(elements, summary, discriminator, 1)
}

/// As [`recall_for_kind`], issuing up to `jobs` judgments concurrently
/// (bounded by the discriminator's own limit). Verdict order always follows
/// element order.
pub fn recall_for_kind_with_jobs(
    elements: &KeyElementSet,
    summary: &GeneratedSummary,
    discriminator: &dyn Discriminator,
    jobs: usize,
) -> Result<RecallOutcome, RecallError> {
    if summary.text.trim().is_empty() {
        return Err(RecallError::EmptySummary(summary.key().to_string()));
    }
    if elements.is_empty() {
        return Ok(RecallOutcome::Absent(AbsenceReason::EmptyElementSet));
    }
    let verdicts = judge_all(&summary.text, elements, discriminator, jobs)?;
    let entailed = verdicts.iter().filter(|v| **v).count();
    let total = elements.len();
    Ok(RecallOutcome::Present(RecallResult {
        kind: elements.kind(),
        entailed,
        total,
        recall: entailed as f64 / total as f64,
        per_element: elements
            .elements()
            .iter()
            .cloned()
            .zip(verdicts)
            .map(|(element, entailed)| ElementVerdict { element, entailed })
            .collect(),
    }))
}

fn judge_all(
    summary: &str,
    set: &KeyElementSet,
    discriminator: &dyn Discriminator,
    jobs: usize,
) -> Result<Vec<bool>, RecallError> {
    let judge_one = |index: usize, element: &KeyElement| {
        discriminator
            .judge(summary, element)
            .map_err(|source| RecallError::DiscriminatorFailure {
                kind: set.kind(),
                index,
                element: element.rendered.clone(),
                source,
            })
    };
    let workers = jobs.min(discriminator.max_in_flight()).min(set.len()).max(1);
    if workers == 1 {
        return set
            .elements()
            .iter()
            .enumerate()
            .map(|(i, e)| judge_one(i, e))
            .collect();
    }
    let chunk = set.len().div_ceil(workers);
    let results: Vec<Result<Vec<bool>, RecallError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = set
            .elements()
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                let judge_one = &judge_one;
                scope.spawn(move || {
                    part.iter()
                        .enumerate()
                        .map(|(i, e)| judge_one(c * chunk + i, e))
                        .collect::<Result<Vec<bool>, RecallError>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("discriminator worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(set.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// The element set of `kind` annotated on an instance, if the annotation exists.
pub fn element_set(instance: &Instance, kind: ElementKind) -> Option<KeyElementSet> {
    let payloads: Vec<ElementPayload> = match kind {
        ElementKind::Temporal => instance
            .temporal
            .iter()
            .cloned()
            .map(ElementPayload::Temporal)
            .collect(),
        _ => {
            let g = instance.global_annotation.as_ref()?;
            match kind {
                ElementKind::Event => g.sub_events.iter().cloned().map(ElementPayload::Sentence).collect(),
                ElementKind::Argument => g.arguments.iter().cloned().map(ElementPayload::Argument).collect(),
                ElementKind::Causal => g.causal.iter().cloned().map(ElementPayload::Causal).collect(),
                ElementKind::Temporal => unreachable!(),
            }
        }
    };
    Some(KeyElementSet {
        kind,
        elements: payloads.into_iter().map(KeyElement::new).collect(),
    })
}

/// All four recalls of a summary; kinds without annotations are absent.
pub fn evaluate_summary(
    instance: &Instance,
    summary: &GeneratedSummary,
    discriminator: &dyn Discriminator,
) -> Result<BTreeMap<ElementKind, RecallOutcome>, RecallError> {
    evaluate_summary_with_jobs(instance, summary, discriminator, 1)
}

pub fn evaluate_summary_with_jobs(
    instance: &Instance,
    summary: &GeneratedSummary,
    discriminator: &dyn Discriminator,
    jobs: usize,
) -> Result<BTreeMap<ElementKind, RecallOutcome>, RecallError> {
    let mut out = BTreeMap::new();
    for kind in ElementKind::ALL {
        let outcome = match element_set(instance, kind) {
            None => RecallOutcome::Absent(AbsenceReason::MissingAnnotation),
            Some(set) => recall_for_kind_with_jobs(&set, summary, discriminator, jobs)?,
        };
        out.insert(kind, outcome);
    }
    Ok(out)
}

/// One line of the per-element verdict dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub instance_id: String,
    pub system_id: String,
    pub shots: u32,
    pub kind: ElementKind,
    pub index: usize,
    pub element: String,
    pub entailed: u8,
}

pub fn verdict_records(
    summary: &GeneratedSummary,
    outcomes: &BTreeMap<ElementKind, RecallOutcome>,
) -> Vec<VerdictRecord> {
    outcomes
        .values()
        .filter_map(RecallOutcome::result)
        .flat_map(|r| {
            r.per_element.iter().enumerate().map(move |(index, v)| VerdictRecord {
                instance_id: summary.instance_id.clone(),
                system_id: summary.system_id.clone(),
                shots: summary.shots,
                kind: r.kind,
                index,
                element: v.element.rendered.clone(),
                entailed: v.entailed as u8,
            })
        })
        .collect()
}

/// Request body of the remote discriminator protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub summary: String,
    pub element: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub entailed: u8,
}

/// Batched request: `summary[i]` is judged against `element[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchJudgeRequest {
    pub summary: Vec<String>,
    pub element: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchJudgeResponse {
    pub entailed: Vec<u8>,
}

/// Discriminator served over HTTP (one JSON POST per judgment).
///
/// `endpoint` may contain a `{kind}` placeholder, replaced by the element
/// kind, so each kind can be routed to its own model.
#[derive(Debug, Clone)]
pub struct HttpDiscriminator {
    endpoint: String,
    agent: ureq::Agent,
    max_in_flight: usize,
}

impl HttpDiscriminator {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
            max_in_flight: 4,
        }
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    fn url(&self, kind: ElementKind) -> String {
        self.endpoint.replace("{kind}", kind.as_str())
    }

    /// Judges `elements` against one summary in a single batched call.
    pub fn judge_batch(&self, summary: &str, elements: &[KeyElement]) -> Result<Vec<bool>, DiscriminatorError> {
        let Some(first) = elements.first() else {
            return Ok(Vec::new());
        };
        let body = BatchJudgeRequest {
            summary: vec![summary.to_string(); elements.len()],
            element: elements.iter().map(|e| e.rendered.clone()).collect(),
        };
        let resp: BatchJudgeResponse = self
            .agent
            .post(&self.url(first.kind()))
            .send_json(&body)
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| DiscriminatorError(e.to_string()))?;
        if resp.entailed.len() != elements.len() {
            return Err(DiscriminatorError(format!(
                "batch response has {} verdicts for {} elements",
                resp.entailed.len(),
                elements.len()
            )));
        }
        resp.entailed.into_iter().map(verdict).collect()
    }
}

fn verdict(v: u8) -> Result<bool, DiscriminatorError> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(DiscriminatorError(format!("verdict must be 0 or 1, got {other}"))),
    }
}

impl Discriminator for HttpDiscriminator {
    fn name(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn judge(&self, summary: &str, element: &KeyElement) -> Result<bool, DiscriminatorError> {
        let body = JudgeRequest {
            summary: summary.to_string(),
            element: element.rendered.clone(),
        };
        let resp: JudgeResponse = self
            .agent
            .post(&self.url(element.kind()))
            .send_json(&body)
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| DiscriminatorError(e.to_string()))?;
        verdict(resp.entailed)
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArgumentRole, GlobalAnnotation};

    fn summary(text: &str) -> GeneratedSummary {
        GeneratedSummary {
            instance_id: "i".into(),
            system_id: "s".into(),
            text: text.into(),
            shots: 0,
        }
    }

    /// Entails exactly the elements whose rendered text is listed.
    struct Listed(Vec<&'static str>);
    impl Discriminator for Listed {
        fn name(&self) -> String {
            "listed".into()
        }
        fn judge(&self, _: &str, e: &KeyElement) -> Result<bool, DiscriminatorError> {
            Ok(self.0.contains(&e.rendered.as_str()))
        }
    }

    fn events(names: &[&str]) -> KeyElementSet {
        KeyElementSet::new(
            ElementKind::Event,
            names.iter().map(|n| KeyElement::event(*n)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn render_templates() {
        assert_eq!(KeyElement::event("S").rendered, "S");
        let c = ElementPayload::Causal(CausalRelation::new("暴雨来袭", "道路被淹", CausalKind::Cause));
        assert_eq!(render_element(&c), "因为暴雨来袭，所以道路被淹");
        let c = ElementPayload::Causal(CausalRelation::new("堤坝完好", "村庄安全", CausalKind::Precondition));
        assert_eq!(render_element(&c), "堤坝完好，在此前提下村庄安全");
        let t = ElementPayload::Temporal(TemporalRelation::before("A", "B"));
        assert_eq!(render_element(&t), "A。随后，B");
        let t = ElementPayload::Temporal(TemporalRelation::before("暴雨来袭。", "道路被淹。"));
        assert_eq!(render_element(&t), "暴雨来袭。随后，道路被淹。");
        let a = ElementPayload::Argument(Argument::new("河北", ArgumentRole::Location).with_corefs(["冀"]));
        assert_eq!(render_element(&a), "河北");
    }

    #[test]
    fn recall_all_none_and_partial() {
        let set = events(&["e1", "e2", "e3"]);
        let s = summary("x");
        let all = recall_for_kind(&set, &s, &Listed(vec!["e1", "e2", "e3"])).unwrap();
        assert_eq!(all.value(), Some(1.0));
        let none = recall_for_kind(&set, &s, &Listed(vec![])).unwrap();
        assert_eq!(none.value(), Some(0.0));
        let some = recall_for_kind(&set, &s, &Listed(vec!["e1", "e3"])).unwrap();
        let r = some.result().unwrap();
        assert_eq!((r.entailed, r.total), (2, 3));
        assert_eq!(r.recall, 2.0 / 3.0);
        let verdicts: Vec<bool> = r.per_element.iter().map(|v| v.entailed).collect();
        assert_eq!(verdicts, vec![true, false, true]);
    }

    #[test]
    fn empty_set_is_absent() {
        let out = recall_for_kind(&events(&[]), &summary("x"), &ContainmentOracle).unwrap();
        assert_eq!(out, RecallOutcome::Absent(AbsenceReason::EmptyElementSet));
        assert_eq!(out.value(), None);
    }

    #[test]
    fn empty_summary_is_rejected() {
        assert!(matches!(
            recall_for_kind(&events(&["a"]), &summary(" "), &ContainmentOracle),
            Err(RecallError::EmptySummary(_))
        ));
    }

    #[test]
    fn mixed_kinds_rejected() {
        let r = KeyElementSet::new(
            ElementKind::Event,
            vec![KeyElement::new(ElementPayload::Argument(Argument::new(
                "a",
                ArgumentRole::Person,
            )))],
        );
        assert!(matches!(r, Err(RecallError::MixedKinds { .. })));
    }

    struct Broken;
    impl Discriminator for Broken {
        fn name(&self) -> String {
            "broken".into()
        }
        fn judge(&self, _: &str, e: &KeyElement) -> Result<bool, DiscriminatorError> {
            if e.rendered == "bad" {
                Err(DiscriminatorError("timeout".into()))
            } else {
                Ok(true)
            }
        }
    }

    #[test]
    fn discriminator_failure_names_element() {
        let err = recall_for_kind(&events(&["ok", "bad"]), &summary("x"), &Broken).unwrap_err();
        assert_eq!(
            err,
            RecallError::DiscriminatorFailure {
                kind: ElementKind::Event,
                index: 1,
                element: "bad".into(),
                source: DiscriminatorError("timeout".into()),
            }
        );
    }

    #[test]
    fn containment_oracle_cases() {
        let o = containment_oracle();
        assert!(o
            .judge("河北暴雨已造成29人遇难，多地受灾", &KeyElement::event("29人遇难"))
            .unwrap());
        assert!(!o
            .judge("暴雨已造成二十九人遇难", &KeyElement::event("29人遇难"))
            .unwrap());
        let arg = KeyElement::new(ElementPayload::Argument(
            Argument::new("河北", ArgumentRole::Location).with_corefs(["冀"]),
        ));
        assert!(o.judge("冀中南部普降暴雨", &arg).unwrap());
        assert!(o.judge("２９人 遇难", &KeyElement::event("29人遇难")).unwrap());
    }

    fn annotated_instance() -> Instance {
        let docs = (0..5)
            .map(|i| crate::model::Document::new(format!("d{i}"), "x"))
            .collect();
        let mut inst = Instance::new("i", "t", docs, "r");
        inst.reference_kind = crate::model::ReferenceKind::Human;
        inst.global_annotation = Some(GlobalAnnotation {
            sub_events: vec!["暴雨来袭".into(), "道路被淹".into()],
            arguments: vec![
                Argument::new("河北", ArgumentRole::Location),
                Argument::new("7月29日", ArgumentRole::Time),
                Argument::new("应急管理部", ArgumentRole::Organization).with_corefs(["应急部"]),
            ],
            causal: vec![CausalRelation::new("暴雨来袭", "道路被淹", CausalKind::Cause)],
        });
        inst.temporal = vec![TemporalRelation::before("暴雨来袭", "道路被淹")];
        inst
    }

    struct Always;
    impl Discriminator for Always {
        fn name(&self) -> String {
            "always".into()
        }
        fn judge(&self, _: &str, _: &KeyElement) -> Result<bool, DiscriminatorError> {
            Ok(true)
        }
    }

    #[test]
    fn evaluate_summary_all_kinds() {
        let out = evaluate_summary(&annotated_instance(), &summary("任意"), &Always).unwrap();
        for k in ElementKind::ALL {
            assert_eq!(out[&k].value(), Some(1.0), "{k}");
        }
        assert_eq!(out[&ElementKind::Argument].result().unwrap().total, 3);
    }

    #[test]
    fn evaluate_summary_without_global_annotation() {
        let mut inst = annotated_instance();
        inst.global_annotation = None;
        let out = evaluate_summary(&inst, &summary("任意"), &Always).unwrap();
        assert_eq!(out[&ElementKind::Temporal].value(), Some(1.0));
        for k in [ElementKind::Event, ElementKind::Argument, ElementKind::Causal] {
            assert_eq!(out[&k], RecallOutcome::Absent(AbsenceReason::MissingAnnotation));
        }
    }

    #[test]
    fn evaluate_summary_with_containment() {
        // summary mentions 暴雨来袭, 河北 and the abbreviation 应急部 only
        let s = summary("7月 29日，河北暴雨来袭，应急部启动响应。");
        let out = evaluate_summary(&annotated_instance(), &s, &ContainmentOracle).unwrap();
        let verdicts = |k: ElementKind| -> Vec<bool> {
            out[&k]
                .result()
                .unwrap()
                .per_element
                .iter()
                .map(|v| v.entailed)
                .collect()
        };
        assert_eq!(verdicts(ElementKind::Event), vec![true, false]);
        assert_eq!(verdicts(ElementKind::Argument), vec![true, true, true]);
        assert_eq!(verdicts(ElementKind::Causal), vec![false]);
        assert_eq!(verdicts(ElementKind::Temporal), vec![false]);
        let dump = verdict_records(&s, &out);
        assert_eq!(dump.len(), 7);
        assert_eq!(dump[0].kind, ElementKind::Event);
    }

    #[test]
    fn parallel_judging_preserves_order() {
        let names: Vec<String> = (0..37).map(|i| format!("e{i}")).collect();
        let set = KeyElementSet::new(ElementKind::Event, names.iter().map(KeyElement::event).collect()).unwrap();
        let s = summary("e1 e3 e5 e30");
        let seq = recall_for_kind_with_jobs(&set, &s, &ContainmentOracle, 1).unwrap();
        let par = recall_for_kind_with_jobs(&set, &s, &ContainmentOracle, 6).unwrap();
        assert_eq!(seq, par);
    }
}
