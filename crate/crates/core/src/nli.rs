//! Training pairs `(t1, t2, label)` for the entailment discriminators.
//!
//! Positives rephrase an annotated element into a sentence `t2` entailed by
//! the source text `t1`. Negatives mutate a positive with one of three
//! strategies:
//!
//! * remove: drop every sentence of `t1` whose similarity to `t2` exceeds a
//!   threshold
//! * revise: corrupt a key fact of `t2` (time, place, quantity, person)
//! * replace: swap `t1` for the most similar text from a random pool that
//!   shares no event anchor with the source

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::NaiveDate;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbeddingProvider, ProviderError};
use crate::harness::{GenerationBackend, GenerationParams};
use crate::hashing::derive_seed;
use crate::model::{to_json_line, Argument, ArgumentRole, CausalRelation, Instance, Split, TemporalRelation};
use crate::recall::{render_element, ElementKind, ElementPayload};
use crate::text::split_sentences;

pub const MAX_REPHRASE_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Positive,
    Remove,
    Revise,
    Replace,
}

impl Strategy {
    pub const NEGATIVE: [Strategy; 3] = [Strategy::Remove, Strategy::Revise, Strategy::Replace];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Positive => "positive",
            Strategy::Remove => "remove",
            Strategy::Revise => "revise",
            Strategy::Replace => "replace",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Strategy::Positive,
            Strategy::Remove,
            Strategy::Revise,
            Strategy::Replace,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

/// One training pair. Fields are private so the label always agrees with
/// the strategy and neither text is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NliPair {
    t1: String,
    t2: String,
    label: u8,
    kind: ElementKind,
    strategy: Strategy,
    source_id: String,
}

#[derive(Deserialize)]
struct NliPairRecord {
    t1: String,
    t2: String,
    label: u8,
    kind: ElementKind,
    strategy: Strategy,
    source_id: String,
}

impl<'de> Deserialize<'de> for NliPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = NliPairRecord::deserialize(d)?;
        let pair = NliPair::new(r.t1, r.t2, r.kind, r.strategy, r.source_id).map_err(serde::de::Error::custom)?;
        if pair.label != r.label {
            return Err(serde::de::Error::custom(format!(
                "label {} contradicts strategy {}",
                r.label, r.strategy
            )));
        }
        Ok(pair)
    }
}

impl NliPair {
    pub fn new(
        t1: impl Into<String>,
        t2: impl Into<String>,
        kind: ElementKind,
        strategy: Strategy,
        source_id: impl Into<String>,
    ) -> Result<Self, NliError> {
        let (t1, t2) = (t1.into(), t2.into());
        if t1.trim().is_empty() || t2.trim().is_empty() {
            return Err(NliError::EmptyText);
        }
        Ok(Self {
            t1,
            t2,
            label: (strategy == Strategy::Positive) as u8,
            kind,
            strategy,
            source_id: source_id.into(),
        })
    }

    pub fn t1(&self) -> &str {
        &self.t1
    }

    pub fn t2(&self) -> &str {
        &self.t2
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }
}

/// A structured annotation to be turned into `t2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructuredElement {
    /// A sub-event already written as a sentence; used verbatim.
    Sentence {
        sentence: String,
    },
    Event {
        trigger: String,
        #[serde(default)]
        arguments: Vec<Argument>,
    },
    Argument {
        argument: Argument,
    },
    Causal {
        relation: CausalRelation,
    },
    Temporal {
        relation: TemporalRelation,
    },
}

impl StructuredElement {
    pub fn kind(&self) -> ElementKind {
        match self {
            StructuredElement::Sentence { .. } | StructuredElement::Event { .. } => ElementKind::Event,
            StructuredElement::Argument { .. } => ElementKind::Argument,
            StructuredElement::Causal { .. } => ElementKind::Causal,
            StructuredElement::Temporal { .. } => ElementKind::Temporal,
        }
    }
}

/// What identifies the event a text is about, for the replace strategy.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventAnchor {
    #[serde(default)]
    pub trigger: Option<String>,
    #[serde(default)]
    pub date: Option<NaiveDate>,
}

/// Source text plus one annotated element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub source_id: String,
    pub text: String,
    pub element: StructuredElement,
    #[serde(default)]
    pub anchor: EventAnchor,
}

impl SourceRecord {
    pub fn kind(&self) -> ElementKind {
        self.element.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct RephraserError(pub String);

/// Turns structured annotations into sentences and corrupts sentences.
pub trait Rephraser: Send + Sync {
    fn to_sentence(&self, element: &StructuredElement) -> Result<String, RephraserError>;

    /// A variant of `sentence` with at least one key fact changed.
    fn revise(&self, sentence: &str) -> Result<String, RephraserError>;
}

/// Deterministic offline rephraser.
///
/// Sentences are assembled from fixed templates. Revision bumps the first
/// number in the sentence, else swaps a known place or person for another,
/// else appends an invented casualty detail.
#[derive(Debug, Clone, Default)]
pub struct TemplateRephraser;

const SWAPS: &[(&str, &str)] = &[
    ("北京", "上海"),
    ("上海", "广州"),
    ("广州", "深圳"),
    ("深圳", "北京"),
    ("河北", "河南"),
    ("河南", "山东"),
    ("山东", "河北"),
    ("男子", "女子"),
    ("女子", "男子"),
    ("上午", "下午"),
    ("下午", "上午"),
];

fn number_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[0-9]+").expect("number pattern compiles"))
}

impl Rephraser for TemplateRephraser {
    fn to_sentence(&self, element: &StructuredElement) -> Result<String, RephraserError> {
        Ok(match element {
            StructuredElement::Sentence { sentence } => sentence.clone(),
            StructuredElement::Event { trigger, arguments } => event_sentence(trigger, arguments),
            StructuredElement::Argument { argument } => argument.text.clone(),
            StructuredElement::Causal { relation } => render_element(&ElementPayload::Causal(relation.clone())),
            StructuredElement::Temporal { relation } => render_element(&ElementPayload::Temporal(relation.clone())),
        })
    }

    fn revise(&self, sentence: &str) -> Result<String, RephraserError> {
        if let Some(m) = number_pattern().find(sentence) {
            let n: u128 = m
                .as_str()
                .parse()
                .map_err(|_| RephraserError("number too long".into()))?;
            return Ok(format!("{}{}{}", &sentence[..m.start()], n + 1, &sentence[m.end()..]));
        }
        for (from, to) in SWAPS {
            if let Some(pos) = sentence.find(from) {
                return Ok(format!("{}{}{}", &sentence[..pos], to, &sentence[pos + from.len()..]));
            }
        }
        let body = sentence.trim_end_matches(['。', '.']);
        Ok(format!("{body}，另有多人受伤。"))
    }
}

fn event_sentence(trigger: &str, arguments: &[Argument]) -> String {
    let pick = |role: ArgumentRole| -> Vec<&str> {
        arguments
            .iter()
            .filter(|a| a.role == role)
            .map(|a| a.text.as_str())
            .collect()
    };
    let time = pick(ArgumentRole::Time).join("");
    let place = pick(ArgumentRole::Location).join("、");
    let mut agents = pick(ArgumentRole::Person);
    agents.extend(pick(ArgumentRole::Organization));
    let mut s = String::new();
    if !time.is_empty() {
        s.push_str(&time);
        s.push('，');
    }
    s.push_str(&agents.join("、"));
    if !place.is_empty() {
        s.push('在');
        s.push_str(&place);
    }
    s.push_str(trigger);
    s.push('。');
    s
}

/// Rephraser backed by an instruction-following generation model.
pub struct LlmRephraser<'a> {
    pub backend: &'a dyn GenerationBackend,
    pub params: GenerationParams,
}

impl LlmRephraser<'_> {
    fn ask(&self, prompt: &str) -> Result<String, RephraserError> {
        let out = self
            .backend
            .generate(prompt, &self.params)
            .map_err(|e| RephraserError(e.to_string()))?;
        Ok(out.trim().to_string())
    }
}

impl Rephraser for LlmRephraser<'_> {
    fn to_sentence(&self, element: &StructuredElement) -> Result<String, RephraserError> {
        let prompt = match element {
            StructuredElement::Sentence { sentence } => return Ok(sentence.clone()),
            StructuredElement::Event { trigger, arguments } => {
                let args: Vec<String> = arguments
                    .iter()
                    .map(|a| format!("{}：{}", role_label(a.role), a.text))
                    .collect();
                format!(
                    "请把下面的结构化事件信息改写成一句通顺的中文句子，只输出这句话。\n触发词：{trigger}\n{}",
                    args.join("\n")
                )
            }
            StructuredElement::Argument { argument } => return Ok(argument.text.clone()),
            StructuredElement::Causal { relation } => format!(
                "下面两句话之间存在因果关系，前一句是原因，后一句是结果。请用恰当的连词把它们连成一句通顺的话，只输出这句话。\n原因：{}\n结果：{}",
                relation.cause_sentence, relation.effect_sentence
            ),
            StructuredElement::Temporal { relation } => format!(
                "下面两句话描述的事件先后发生。请用恰当的连词把它们连成一句通顺的话，保持先后顺序，只输出这句话。\n先发生：{}\n后发生：{}",
                relation.earlier, relation.later
            ),
        };
        self.ask(&prompt)
    }

    fn revise(&self, sentence: &str) -> Result<String, RephraserError> {
        self.ask(&format!(
            "请修改下面句子中的关键信息，例如时间、地点、数量或人物，也可以增加或删去事件周边的细节，使修改后的句子与原句意思不再一致。只输出修改后的句子。\n原句：{sentence}"
        ))
    }
}

fn role_label(role: ArgumentRole) -> &'static str {
    match role {
        ArgumentRole::Time => "时间",
        ArgumentRole::Location => "地点",
        ArgumentRole::Person => "人物",
        ArgumentRole::Organization => "机构",
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NliError {
    #[error("pair text is empty")]
    EmptyText,
    #[error("rephraser failed after {attempts} attempts: {source}")]
    RephraserFailure {
        attempts: usize,
        #[source]
        source: RephraserError,
    },
    #[error("revision returned the input unchanged {0} times")]
    IdenticalRevision(usize),
    #[error("no sentence of t1 exceeds the similarity threshold")]
    DegenerateRemoval,
    #[error("removal left t1 empty")]
    EmptyRemoval,
    #[error("no replacement candidate is free of shared event anchors")]
    NoEligibleReplacement,
    #[error("negative strategies apply to positive pairs only")]
    NotPositive,
    #[error("argument {0:?} has no coreferent mention to substitute")]
    NoCoref(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("source {source_id} has kind {found}, expected {expected}")]
    KindMismatch {
        source_id: String,
        expected: ElementKind,
        found: ElementKind,
    },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("no source records")]
    NoSources,
    #[error("{skipped} of {attempted} pairs failed, above the {max_rate} limit")]
    TooManySkips {
        skipped: usize,
        attempted: usize,
        max_rate: f64,
    },
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

impl NliError {
    /// Short stable name used in skip histograms.
    pub fn reason(&self) -> &'static str {
        match self {
            NliError::EmptyText => "empty_text",
            NliError::RephraserFailure { .. } => "rephraser_failure",
            NliError::IdenticalRevision(_) => "identical_revision",
            NliError::DegenerateRemoval => "degenerate_removal",
            NliError::EmptyRemoval => "empty_removal",
            NliError::NoEligibleReplacement => "no_eligible_replacement",
            NliError::NotPositive => "not_positive",
            NliError::NoCoref(_) => "no_coref",
            NliError::Provider(_) => "provider",
            NliError::KindMismatch { .. } => "kind_mismatch",
            NliError::InvalidPlan(_) => "invalid_plan",
            NliError::NoSources => "no_sources",
            NliError::TooManySkips { .. } => "too_many_skips",
            NliError::Io { .. } => "io",
        }
    }
}

fn rephrase_with_retries<F>(mut f: F) -> Result<String, NliError>
where
    F: FnMut() -> Result<String, RephraserError>,
{
    let mut last = RephraserError("empty output".into());
    for _ in 0..MAX_REPHRASE_ATTEMPTS {
        match f() {
            Ok(s) if !s.trim().is_empty() => return Ok(s),
            Ok(_) => last = RephraserError("empty output".into()),
            Err(e) => last = e,
        }
    }
    Err(NliError::RephraserFailure {
        attempts: MAX_REPHRASE_ATTEMPTS,
        source: last,
    })
}

/// Replaces every occurrence of `argument` after the first with `mention`.
///
/// The first occurrence stays so the text still introduces the referent;
/// the later ones now only refer to it through the coreferent mention.
pub fn substitute_coref(text: &str, argument: &str, mention: &str) -> String {
    if argument.is_empty() {
        return text.to_string();
    }
    match text.find(argument) {
        None => text.to_string(),
        Some(first) => {
            let split = first + argument.len();
            format!("{}{}", &text[..split], text[split..].replace(argument, mention))
        }
    }
}

/// The positive pair of a source record.
///
/// Plain arguments use the surface form as `t2`. Arguments with coreferent
/// mentions pick one mention with `rng`, rewrite the later occurrences of
/// the argument in `t1` to that mention and use it as `t2`.
pub fn make_positive(
    record: &SourceRecord,
    rephraser: &dyn Rephraser,
    rng: &mut impl Rng,
) -> Result<NliPair, NliError> {
    let (t1, t2) = match &record.element {
        StructuredElement::Argument { argument } if !argument.corefs.is_empty() => {
            let mention = &argument.corefs[rng.random_range(0..argument.corefs.len())];
            (substitute_coref(&record.text, &argument.text, mention), mention.clone())
        }
        StructuredElement::Argument { argument } => (record.text.clone(), argument.text.clone()),
        element => (
            record.text.clone(),
            rephrase_with_retries(|| rephraser.to_sentence(element))?,
        ),
    };
    NliPair::new(t1, t2, record.kind(), Strategy::Positive, &record.source_id)
}

fn require_positive(pair: &NliPair) -> Result<(), NliError> {
    if pair.strategy == Strategy::Positive {
        Ok(())
    } else {
        Err(NliError::NotPositive)
    }
}

/// Drops every sentence of `t1` whose similarity to `t2` is strictly above
/// `threshold`.
pub fn negative_remove(pair: &NliPair, provider: &dyn EmbeddingProvider, threshold: f64) -> Result<NliPair, NliError> {
    require_positive(pair)?;
    let sentences = split_sentences(&pair.t1);
    let refs: Vec<&str> = sentences.iter().map(String::as_str).collect();
    let scores = provider.score_against(&refs, &pair.t2)?;
    if scores.len() != sentences.len() {
        return Err(ProviderError(format!("expected {} scores, got {}", sentences.len(), scores.len())).into());
    }
    let kept: Vec<&str> = refs
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s <= threshold)
        .map(|(t, _)| *t)
        .collect();
    if kept.len() == sentences.len() {
        return Err(NliError::DegenerateRemoval);
    }
    if kept.is_empty() {
        return Err(NliError::EmptyRemoval);
    }
    NliPair::new(
        kept.concat(),
        pair.t2.clone(),
        pair.kind,
        Strategy::Remove,
        &pair.source_id,
    )
}

/// Replaces `t2` by a corrupted revision. Identical or empty revisions are
/// retried up to [`MAX_REPHRASE_ATTEMPTS`] times.
pub fn negative_revise(pair: &NliPair, rephraser: &dyn Rephraser) -> Result<NliPair, NliError> {
    require_positive(pair)?;
    let mut identical = 0;
    let mut last_err = None;
    for _ in 0..MAX_REPHRASE_ATTEMPTS {
        match rephraser.revise(&pair.t2) {
            Ok(s) if s.trim().is_empty() => last_err = Some(RephraserError("empty output".into())),
            Ok(s) if s.trim() == pair.t2.trim() => identical += 1,
            Ok(s) => return NliPair::new(pair.t1.clone(), s, pair.kind, Strategy::Revise, &pair.source_id),
            Err(e) => last_err = Some(e),
        }
    }
    match last_err {
        Some(source) if identical < MAX_REPHRASE_ATTEMPTS => Err(NliError::RephraserFailure {
            attempts: MAX_REPHRASE_ATTEMPTS,
            source,
        }),
        _ => Err(NliError::IdenticalRevision(identical)),
    }
}

/// Which anchors make a replacement candidate ineligible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorRule {
    /// Same trigger, or the source trigger occurs in the candidate text.
    pub trigger: bool,
    /// Same event date.
    pub date: bool,
}

impl Default for AnchorRule {
    fn default() -> Self {
        Self {
            trigger: true,
            date: true,
        }
    }
}

impl AnchorRule {
    pub fn overlaps(&self, source: &EventAnchor, candidate: &SourceRecord) -> bool {
        let trigger_hit = self.trigger
            && source.trigger.as_deref().is_some_and(|t| {
                !t.is_empty() && (candidate.anchor.trigger.as_deref() == Some(t) || candidate.text.contains(t))
            });
        let date_hit = self.date && source.date.is_some() && source.date == candidate.anchor.date;
        trigger_hit || date_hit
    }
}

/// Swaps `t1` for the pool text most similar to `t2` among candidates that
/// share no event anchor with the source. Ties keep the earlier candidate.
pub fn negative_replace(
    pair: &NliPair,
    source_anchor: &EventAnchor,
    pool: &[&SourceRecord],
    provider: &dyn EmbeddingProvider,
    rule: AnchorRule,
) -> Result<NliPair, NliError> {
    require_positive(pair)?;
    let eligible: Vec<&SourceRecord> = pool
        .iter()
        .copied()
        .filter(|c| c.source_id != pair.source_id && c.text != pair.t1 && !c.text.trim().is_empty())
        .filter(|c| !rule.overlaps(source_anchor, c))
        .collect();
    if eligible.is_empty() {
        return Err(NliError::NoEligibleReplacement);
    }
    let texts: Vec<&str> = eligible.iter().map(|c| c.text.as_str()).collect();
    let scores = provider.score_against(&texts, &pair.t2)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    NliPair::new(
        eligible[best].text.clone(),
        pair.t2.clone(),
        pair.kind,
        Strategy::Replace,
        &pair.source_id,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.7,
            dev: 0.15,
            test: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::Test => self.test,
        }
    }
}

/// Published data sizes (train/dev/test pairs) of the four discriminator
/// datasets; kept as manifest metadata only.
pub fn reference_sizes(kind: ElementKind) -> SplitSizes {
    let (train, dev, test) = match kind {
        ElementKind::Event => (13_265, 2_433, 4_481),
        ElementKind::Argument => (15_000, 3_000, 3_000),
        ElementKind::Causal => (10_082, 3_505, 4_098),
        ElementKind::Temporal => (9_678, 1_461, 1_318),
    };
    SplitSizes { train, dev, test }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildPlan {
    /// Share of positives that also yield a negative.
    pub negative_fraction: f64,
    pub strategy_mix: BTreeMap<Strategy, f64>,
    pub replace_pool_size: usize,
    pub remove_threshold: f64,
    pub splits: SplitFractions,
    pub anchor_rule: AnchorRule,
    /// Optional per-split pair caps applied after splitting.
    pub split_cap: Option<SplitSizes>,
    pub max_skip_rate: f64,
    pub seed: u64,
}

impl Default for BuildPlan {
    fn default() -> Self {
        Self {
            negative_fraction: 0.5,
            strategy_mix: Strategy::NEGATIVE.into_iter().map(|s| (s, 1.0 / 3.0)).collect(),
            replace_pool_size: 100,
            remove_threshold: 0.5,
            splits: SplitFractions::default(),
            anchor_rule: AnchorRule::default(),
            split_cap: None,
            max_skip_rate: 0.2,
            seed: 0,
        }
    }
}

impl BuildPlan {
    pub fn validate(&self) -> Result<(), NliError> {
        let mut problems = Vec::new();
        if !(self.negative_fraction > 0.0 && self.negative_fraction < 1.0) {
            problems.push(format!(
                "negative_fraction must be in (0, 1), got {}",
                self.negative_fraction
            ));
        }
        if self.strategy_mix.contains_key(&Strategy::Positive) {
            problems.push("strategy_mix may only weight remove, revise and replace".into());
        }
        if self.strategy_mix.values().any(|w| !w.is_finite() || *w < 0.0) {
            problems.push("strategy weights must be finite and non-negative".into());
        }
        let total: f64 = self.strategy_mix.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            problems.push(format!("strategy weights must sum to 1, got {total}"));
        }
        if self.replace_pool_size == 0 {
            problems.push("replace_pool_size must be positive".into());
        }
        let s = self.splits;
        if [s.train, s.dev, s.test].iter().any(|f| !f.is_finite() || *f < 0.0)
            || (s.train + s.dev + s.test - 1.0).abs() > 1e-9
        {
            problems.push("split fractions must be non-negative and sum to 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_skip_rate) {
            problems.push("max_skip_rate must be in [0, 1]".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(NliError::InvalidPlan(problems.join("; ")))
        }
    }

    fn sample_strategy(&self, rng: &mut impl Rng) -> Strategy {
        let x: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = Strategy::Remove;
        for (&s, &w) in &self.strategy_mix {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = s;
            if x < acc {
                return s;
            }
        }
        last
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub sources: usize,
    pub attempted: usize,
    pub skipped: BTreeMap<String, usize>,
    /// Emitted pairs per split and strategy.
    pub counts: BTreeMap<Split, BTreeMap<Strategy, usize>>,
    /// Pairs removed by the per-split cap.
    pub capped: usize,
}

impl BuildStats {
    pub fn total(&self, split: Split) -> usize {
        self.counts.get(&split).map_or(0, |m| m.values().sum())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NliDataset {
    pub kind: ElementKind,
    pub splits: BTreeMap<Split, Vec<NliPair>>,
    pub stats: BuildStats,
}

/// Manifest written next to the pair files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliManifest {
    pub kind: ElementKind,
    pub plan: BuildPlan,
    pub stats: BuildStats,
    /// Sizes a dataset is meant to have, for comparison only.
    #[serde(default)]
    pub declared: Option<SplitSizes>,
}

impl NliManifest {
    /// Declared vs built pair counts, for splits that differ.
    pub fn size_mismatches(&self) -> Vec<(Split, usize, usize)> {
        let Some(declared) = self.declared else {
            return Vec::new();
        };
        Split::ALL
            .into_iter()
            .filter_map(|s| {
                let (want, got) = (declared.get(s), self.stats.total(s));
                (want != got).then_some((s, want, got))
            })
            .collect()
    }
}

struct RecordOutcome {
    pairs: Vec<NliPair>,
    errors: Vec<NliError>,
    attempted: usize,
}

/// Builds the pairs of one element kind.
///
/// Every record yields a positive. A seeded `negative_fraction` share of the
/// records also yields one negative whose strategy is drawn from
/// `strategy_mix`. Records are split by `source_id`, so pairs sharing a
/// source always land in the same split. Each record draws from its own
/// random stream, which makes parallel and serial runs agree. Failed pairs
/// are skipped and counted; more than `max_skip_rate` skips fail the build.
pub fn build_dataset(
    kind: ElementKind,
    sources: &[SourceRecord],
    plan: &BuildPlan,
    rephraser: &dyn Rephraser,
    provider: &dyn EmbeddingProvider,
) -> Result<NliDataset, NliError> {
    plan.validate()?;
    if sources.is_empty() {
        return Err(NliError::NoSources);
    }
    if let Some(bad) = sources.iter().find(|s| s.kind() != kind) {
        return Err(NliError::KindMismatch {
            source_id: bad.source_id.clone(),
            expected: kind,
            found: bad.kind(),
        });
    }

    let mut order: Vec<usize> = (0..sources.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, u64::MAX)));
    let n_negative = (plan.negative_fraction * sources.len() as f64).round() as usize;
    let mut convert = vec![false; sources.len()];
    for &i in &order[..n_negative] {
        convert[i] = true;
    }

    let outcomes: Vec<RecordOutcome> = sources
        .par_iter()
        .enumerate()
        .map(|(i, record)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, i as u64));
            let mut out = RecordOutcome {
                pairs: Vec::new(),
                errors: Vec::new(),
                attempted: 1 + convert[i] as usize,
            };
            let positive = match make_positive(record, rephraser, &mut rng) {
                Ok(p) => p,
                Err(e) => {
                    out.errors.push(e);
                    return out;
                }
            };
            if convert[i] {
                let negative = match plan.sample_strategy(&mut rng) {
                    Strategy::Remove => negative_remove(&positive, provider, plan.remove_threshold),
                    Strategy::Revise => negative_revise(&positive, rephraser),
                    Strategy::Replace | Strategy::Positive => {
                        let others = sources.len() - 1;
                        let picks = sample(&mut rng, others, plan.replace_pool_size.min(others));
                        let pool: Vec<&SourceRecord> = picks
                            .into_iter()
                            .map(|j| &sources[if j >= i { j + 1 } else { j }])
                            .collect();
                        negative_replace(&positive, &record.anchor, &pool, provider, plan.anchor_rule)
                    }
                };
                out.pairs.push(positive);
                match negative {
                    Ok(n) => out.pairs.push(n),
                    Err(e) => {
                        log::debug!("{}: negative skipped: {e}", record.source_id);
                        out.errors.push(e);
                    }
                }
            } else {
                out.pairs.push(positive);
            }
            out
        })
        .collect();

    let mut stats = BuildStats {
        sources: sources.len(),
        ..Default::default()
    };
    let mut per_record: Vec<Vec<NliPair>> = Vec::with_capacity(sources.len());
    for outcome in outcomes {
        stats.attempted += outcome.attempted;
        for e in &outcome.errors {
            *stats.skipped.entry(e.reason().to_string()).or_default() += 1;
        }
        per_record.push(outcome.pairs);
    }
    let skipped: usize = stats.skipped.values().sum();
    if skipped as f64 > plan.max_skip_rate * stats.attempted as f64 {
        return Err(NliError::TooManySkips {
            skipped,
            attempted: stats.attempted,
            max_rate: plan.max_skip_rate,
        });
    }

    let assignment = split_sources(sources, plan);
    let mut splits: BTreeMap<Split, Vec<NliPair>> = Split::ALL.into_iter().map(|s| (s, Vec::new())).collect();
    for (i, pairs) in per_record.into_iter().enumerate() {
        splits
            .get_mut(&assignment[&sources[i].source_id])
            .expect("split exists")
            .extend(pairs);
    }
    if let Some(cap) = plan.split_cap {
        for (split, pairs) in splits.iter_mut() {
            let limit = cap.get(*split);
            if pairs.len() > limit {
                stats.capped += pairs.len() - limit;
                pairs.truncate(limit);
            }
        }
    }
    for (split, pairs) in &splits {
        let entry = stats.counts.entry(*split).or_default();
        for p in pairs {
            *entry.entry(p.strategy).or_default() += 1;
        }
    }
    Ok(NliDataset { kind, splits, stats })
}

/// Assigns each distinct `source_id` to a split by a seeded shuffle.
fn split_sources(sources: &[SourceRecord], plan: &BuildPlan) -> HashMap<String, Split> {
    let mut ids: Vec<&str> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for s in sources {
        if seen.insert(s.source_id.as_str()) {
            ids.push(&s.source_id);
        }
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, u64::MAX - 1)));
    let n = ids.len();
    let n_train = (plan.splits.train * n as f64).round() as usize;
    let n_dev = ((plan.splits.dev * n as f64).round() as usize).min(n - n_train.min(n));
    ids.into_iter()
        .enumerate()
        .map(|(i, id)| {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_dev {
                Split::Dev
            } else {
                Split::Test
            };
            (id.to_string(), split)
        })
        .collect()
}

/// Writes `{kind}.{split}.jsonl` per split and `{kind}.manifest.json`.
pub fn write_dataset(
    dir: &Path,
    dataset: &NliDataset,
    plan: &BuildPlan,
    declared: Option<SplitSizes>,
) -> Result<Vec<PathBuf>, NliError> {
    let io = |path: &Path, e: std::io::Error| NliError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    for (split, pairs) in &dataset.splits {
        let path = dir.join(format!("{}.{}.jsonl", dataset.kind, split.as_str()));
        let body: String = pairs.iter().map(|p| to_json_line(p) + "\n").collect();
        fs::write(&path, body).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    let manifest = NliManifest {
        kind: dataset.kind,
        plan: plan.clone(),
        stats: dataset.stats.clone(),
        declared,
    };
    let path = dir.join(format!("{}.manifest.json", dataset.kind));
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| io(&path, e))?;
    written.push(path);
    Ok(written)
}

pub fn read_manifest(path: &Path) -> Result<NliManifest, NliError> {
    let text = fs::read_to_string(path).map_err(|e| NliError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| NliError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Source records of one kind derived from annotated corpus instances.
///
/// The reference summary is the source text and each annotated element one
/// record. Anchors carry the event date only.
pub fn sources_from_instances(instances: &[Instance], kind: ElementKind) -> Vec<SourceRecord> {
    let mut out = Vec::new();
    for inst in instances {
        let anchor = EventAnchor {
            trigger: None,
            date: inst.event_date,
        };
        let elements: Vec<StructuredElement> = match kind {
            ElementKind::Temporal => inst
                .temporal
                .iter()
                .map(|r| StructuredElement::Temporal { relation: r.clone() })
                .collect(),
            _ => {
                let Some(g) = &inst.global_annotation else { continue };
                match kind {
                    ElementKind::Event => g
                        .sub_events
                        .iter()
                        .map(|s| StructuredElement::Sentence { sentence: s.clone() })
                        .collect(),
                    ElementKind::Argument => g
                        .arguments
                        .iter()
                        .map(|a| StructuredElement::Argument { argument: a.clone() })
                        .collect(),
                    ElementKind::Causal => g
                        .causal
                        .iter()
                        .map(|c| StructuredElement::Causal { relation: c.clone() })
                        .collect(),
                    ElementKind::Temporal => unreachable!(),
                }
            }
        };
        out.extend(elements.into_iter().map(|element| SourceRecord {
            source_id: inst.instance_id.clone(),
            text: inst.reference.clone(),
            element,
            anchor: anchor.clone(),
        }));
    }
    out
}
