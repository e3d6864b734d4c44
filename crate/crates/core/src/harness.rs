//! Summarization runs: prompt rendering, generation backends and resumable
//! prediction files.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::{derive_seed, fnv1a, sha256_hex};
use crate::model::{to_json_line, GeneratedSummary, Instance, PredictionKey};
use crate::text::char_len;

pub const DEFAULT_TEMPERATURE: f64 = 0.01;
pub const DEFAULT_MAX_ATTEMPTS: usize = 3;
pub const DEFAULT_MAX_SKIP_RATE: f64 = 0.5;

const DEFAULT_TEMPLATE: &str = include_str!("../assets/prompt_zh.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationParams {
    pub temperature: f64,
    /// Output cap passed to the backend; `None` leaves it uncapped.
    pub max_output_length: Option<usize>,
    pub seed: Option<u64>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: DEFAULT_TEMPERATURE,
            max_output_length: None,
            seed: None,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(HarnessError::InvalidParams(format!(
                "temperature must be a finite value >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_output_length == Some(0) {
            return Err(HarnessError::InvalidParams("max_output_length must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct BackendError(pub String);

/// A text generator. Implementations must not touch toolkit state.
pub trait GenerationBackend: Send + Sync {
    /// Identity recorded in run manifests.
    fn id(&self) -> String;

    /// Maximum prompt length in characters, if the backend has one.
    fn context_limit(&self) -> Option<usize>;

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, BackendError>;

    fn max_concurrency(&self) -> usize {
        1
    }
}

/// Offline backend returning the last `tail_chars` characters of the prompt
/// that precede the final block marker.
#[derive(Debug, Clone)]
pub struct EchoBackend {
    pub tail_chars: usize,
    pub context_limit: Option<usize>,
}

impl Default for EchoBackend {
    fn default() -> Self {
        Self {
            tail_chars: 160,
            context_limit: None,
        }
    }
}

impl GenerationBackend for EchoBackend {
    fn id(&self) -> String {
        format!("echo-{}", self.tail_chars)
    }

    fn context_limit(&self) -> Option<usize> {
        self.context_limit
    }

    fn generate(&self, prompt: &str, _: &GenerationParams) -> Result<String, BackendError> {
        let body = prompt.trim_end().trim_end_matches("摘要：").trim_end();
        let chars: Vec<char> = body.chars().collect();
        let start = chars.len().saturating_sub(self.tail_chars);
        Ok(chars[start..].iter().collect::<String>().trim().to_string())
    }

    fn max_concurrency(&self) -> usize {
        usize::MAX
    }
}

/// Chat-completions client for OpenAI-compatible servers.
///
/// The API key is read from the environment variable named by `api_key_env`
/// (default `OPENAI_API_KEY`) at call time; a missing variable sends no
/// `Authorization` header, which suits local servers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenAiCompatConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// Characters; `None` disables the overflow check.
    #[serde(default)]
    pub context_limit: Option<usize>,
    #[serde(default = "one")]
    pub max_concurrency: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn one() -> usize {
    1
}

fn default_timeout() -> u64 {
    300
}

#[derive(Debug, Clone)]
pub struct OpenAiCompatBackend {
    config: OpenAiCompatConfig,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

impl OpenAiCompatBackend {
    pub fn new(config: OpenAiCompatConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Self { config, agent }
    }
}

impl GenerationBackend for OpenAiCompatBackend {
    fn id(&self) -> String {
        format!("openai-compat:{}@{}", self.config.model, self.config.base_url)
    }

    fn context_limit(&self) -> Option<usize> {
        self.config.context_limit
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = ChatRequest {
            model: &self.config.model,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: params.temperature,
            max_tokens: params.max_output_length,
            seed: params.seed,
        };
        let mut request = self.agent.post(&url);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let response: ChatResponse = request
            .send_json(&body)
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| BackendError(e.to_string()))?;
        response
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError("response has no message content".into()))
    }

    fn max_concurrency(&self) -> usize {
        self.config.max_concurrency.max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub preamble: String,
    /// Header before each document; `{index}` is 1-based.
    pub doc_header: String,
    pub doc_delimiter: String,
    pub block_separator: String,
    pub demonstration_block: String,
    pub target_block: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_TEMPLATE).expect("bundled template parses")
    }
}

impl PromptTemplate {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let t: PromptTemplate = toml::from_str(text).map_err(|e| HarnessError::Template(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let mut missing = Vec::new();
        if !self.doc_header.contains("{index}") {
            missing.push("doc_header lacks {index}");
        }
        if !self.target_block.contains("{documents}") {
            missing.push("target_block lacks {documents}");
        }
        if !self.demonstration_block.contains("{documents}") || !self.demonstration_block.contains("{summary}") {
            missing.push("demonstration_block needs {documents} and {summary}");
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Template(missing.join("; ")))
        }
    }

    /// SHA-256 over the template fields, recorded in run manifests.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("template serializes").as_bytes())
    }

    pub fn render_documents(&self, bodies: &[&str]) -> String {
        bodies
            .iter()
            .enumerate()
            .map(|(i, body)| format!("{}{}", self.doc_header.replace("{index}", &(i + 1).to_string()), body))
            .collect::<Vec<_>>()
            .join(&self.doc_delimiter)
    }
}

/// One demonstration: an instance and the summary shown for it.
#[derive(Debug, Clone, Copy)]
pub struct Demonstration<'a> {
    pub instance: &'a Instance,
    pub summary: &'a str,
}

impl<'a> Demonstration<'a> {
    /// Uses the instance's reference summary.
    pub fn from_reference(instance: &'a Instance) -> Self {
        Self {
            instance,
            summary: &instance.reference,
        }
    }
}

// Placeholders are substituted in one pass so text inside documents that
// looks like a placeholder is never expanded.
fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in values {
            let token = format!("{{{name}}}");
            if tail.starts_with(&token) {
                out.push_str(value);
                rest = &tail[token.len()..];
                continue 'outer;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

fn render_with_bodies(
    instance: &Instance,
    bodies: &[&str],
    demonstrations: &[Demonstration<'_>],
    template: &PromptTemplate,
) -> String {
    let mut blocks = vec![fill(&template.preamble, &[("title", &instance.event_title)])];
    for demo in demonstrations {
        let docs: Vec<&str> = demo.instance.documents.iter().map(|d| d.body.as_str()).collect();
        blocks.push(fill(
            &template.demonstration_block,
            &[
                ("title", &demo.instance.event_title),
                ("documents", &template.render_documents(&docs)),
                ("summary", demo.summary),
            ],
        ));
    }
    blocks.push(fill(
        &template.target_block,
        &[
            ("title", &instance.event_title),
            ("documents", &template.render_documents(bodies)),
        ],
    ));
    blocks.join(&template.block_separator)
}

/// Preamble, then one block per demonstration, then the instance's
/// documents with numbered headers.
pub fn build_prompt(instance: &Instance, demonstrations: &[Demonstration<'_>], template: &PromptTemplate) -> String {
    let bodies: Vec<&str> = instance.documents.iter().map(|d| d.body.as_str()).collect();
    render_with_bodies(instance, &bodies, demonstrations, template)
}

/// [`build_prompt`] checked against a context limit in characters.
///
/// With `truncate` set, an oversized prompt is shrunk by cutting the tail of
/// the longest target document until it fits; otherwise the instance is
/// reported as [`HarnessError::ContextOverflow`].
pub fn fit_prompt(
    instance: &Instance,
    demonstrations: &[Demonstration<'_>],
    template: &PromptTemplate,
    limit: Option<usize>,
    truncate: bool,
) -> Result<String, HarnessError> {
    let prompt = build_prompt(instance, demonstrations, template);
    let Some(limit) = limit else { return Ok(prompt) };
    let length = char_len(&prompt);
    if length <= limit {
        return Ok(prompt);
    }
    let overflow = || HarnessError::ContextOverflow {
        instance_id: instance.instance_id.clone(),
        length,
        limit,
    };
    if !truncate {
        return Err(overflow());
    }
    let mut lens: Vec<usize> = instance.documents.iter().map(|d| char_len(&d.body)).collect();
    let mut excess = length - limit;
    while excess > 0 {
        let (longest, &len) = lens
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .ok_or_else(overflow)?;
        if len == 0 {
            return Err(overflow());
        }
        let runner_up = lens
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != longest)
            .map(|(_, l)| *l)
            .max()
            .unwrap_or(0);
        let cut = excess.min(len - runner_up).max(1).min(len);
        lens[longest] -= cut;
        excess -= cut;
    }
    let bodies: Vec<String> = instance
        .documents
        .iter()
        .zip(&lens)
        .map(|(d, &n)| d.body.chars().take(n).collect())
        .collect();
    let refs: Vec<&str> = bodies.iter().map(String::as_str).collect();
    Ok(render_with_bodies(instance, &refs, demonstrations, template))
}

/// Seeded demonstrations for one target, drawn uniformly without
/// replacement from `train` minus every id in `excluded`.
///
/// The draw depends only on `seed` and the target's id, so it does not
/// change when a run is resumed or reordered.
pub fn sample_demonstrations<'a>(
    target: &Instance,
    train: &'a [Instance],
    excluded: &HashSet<&str>,
    shots: usize,
    seed: u64,
) -> Result<Vec<&'a Instance>, HarnessError> {
    if shots == 0 {
        return Ok(Vec::new());
    }
    let pool: Vec<&Instance> = train
        .iter()
        .filter(|i| !excluded.contains(i.instance_id.as_str()))
        .collect();
    if pool.len() < shots {
        return Err(HarnessError::InsufficientDemonstrations {
            needed: shots,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, fnv1a(target.instance_id.as_bytes())));
    Ok(sample(&mut rng, pool.len(), shots)
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub instance_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub backend: String,
    pub system_id: String,
    pub shots: u32,
    pub params: GenerationParams,
    pub template_hash: String,
    pub seed: u64,
    pub truncate: bool,
    pub requested: usize,
    /// Summaries in the prediction file after this run.
    pub completed: usize,
    pub resumed: usize,
    pub skipped: Vec<SkipRecord>,
    /// Demonstration ids per target (few-shot runs only).
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub demonstrations: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("invalid prompt template: {0}")]
    Template(String),
    #[error("prompt for {instance_id} has {length} characters, backend limit is {limit}")]
    ContextOverflow {
        instance_id: String,
        length: usize,
        limit: usize,
    },
    #[error("need {needed} demonstrations but only {available} training instances are eligible")]
    InsufficientDemonstrations { needed: usize, available: usize },
    #[error("backend failed on {instance_id} after {attempts} attempts: {source}")]
    BackendFailure {
        instance_id: String,
        attempts: usize,
        #[source]
        source: BackendError,
    },
    #[error("{skipped} of {attempted} instances skipped, above the {max_rate} limit")]
    SkipRateExceeded {
        skipped: usize,
        attempted: usize,
        max_rate: f64,
    },
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl HarnessError {
    fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub system_id: String,
    pub shots: u32,
    pub seed: u64,
    /// Worker threads; capped by the backend's declared concurrency.
    pub jobs: usize,
    pub truncate: bool,
    pub max_attempts: usize,
    pub max_skip_rate: f64,
    /// Stop after this many new summaries (the run can be resumed later).
    pub limit: Option<usize>,
}

impl RunOptions {
    pub fn new(system_id: impl Into<String>) -> Self {
        Self {
            system_id: system_id.into(),
            shots: 0,
            seed: 0,
            jobs: 1,
            truncate: false,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            max_skip_rate: DEFAULT_MAX_SKIP_RATE,
            limit: None,
        }
    }
}

/// Prediction and manifest paths of a run inside `dir`.
pub fn run_paths(dir: &Path, system_id: &str, shots: u32) -> (PathBuf, PathBuf) {
    let stem = format!("{system_id}.{shots}shot");
    (
        dir.join(format!("{stem}.jsonl")),
        dir.join(format!("{stem}.manifest.json")),
    )
}

/// Loads the summaries already persisted in `path`, dropping a torn final
/// line left by an interrupted write.
fn recover_predictions(path: &Path) -> Result<Vec<GeneratedSummary>, HarnessError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut summaries = Vec::new();
    let mut good_bytes = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| HarnessError::io(path, e))?;
        if n == 0 {
            break;
        }
        let complete = line.ends_with('\n');
        match serde_json::from_str::<GeneratedSummary>(line.trim_end()) {
            Ok(s) if complete => {
                summaries.push(s);
                good_bytes += n as u64;
            }
            Ok(_) | Err(_) => {
                let mut rest = String::new();
                reader.read_line(&mut rest).map_err(|e| HarnessError::io(path, e))?;
                if !rest.is_empty() {
                    return Err(HarnessError::Corrupt {
                        path: path.to_path_buf(),
                        reason: format!("unreadable record after {} complete lines", summaries.len()),
                    });
                }
                log::warn!("{}: dropping torn final line", path.display());
                break;
            }
        }
    }
    let file = OpenOptions::new()
        .write(true)
        .open(path)
        .map_err(|e| HarnessError::io(path, e))?;
    file.set_len(good_bytes).map_err(|e| HarnessError::io(path, e))?;
    Ok(summaries)
}

#[derive(Debug)]
pub struct RunOutcome {
    /// Every summary in the prediction file, persisted earlier or now.
    pub summaries: Vec<GeneratedSummary>,
    pub manifest: RunManifest,
    pub predictions_path: PathBuf,
    pub manifest_path: PathBuf,
}

enum Attempt {
    Done(GeneratedSummary),
    Skipped(SkipRecord),
}

/// Runs `backend` over `instances` and appends one summary per instance to
/// `{out_dir}/{system}.{shots}shot.jsonl`.
///
/// Instances whose key is already in the file are not regenerated, so an
/// interrupted run continues where it stopped. Results are appended in
/// instance order. Instances that overflow the context or keep failing are
/// skipped and listed in the manifest; the run fails if more than
/// `max_skip_rate` of the attempted instances were skipped.
pub fn run_batch(
    instances: &[Instance],
    train: &[Instance],
    backend: &dyn GenerationBackend,
    params: &GenerationParams,
    template: &PromptTemplate,
    options: &RunOptions,
    out_dir: &Path,
) -> Result<RunOutcome, HarnessError> {
    params.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let (pred_path, manifest_path) = run_paths(out_dir, &options.system_id, options.shots);

    let mut summaries = recover_predictions(&pred_path)?;
    let done: HashSet<PredictionKey> = summaries.iter().map(GeneratedSummary::key).collect();
    let resumed = summaries.len();

    let targets: HashSet<&str> = instances.iter().map(|i| i.instance_id.as_str()).collect();
    let mut demonstrations = BTreeMap::new();
    let mut pending: Vec<(&Instance, Vec<&Instance>)> = Vec::new();
    for inst in instances {
        let key = PredictionKey {
            instance_id: inst.instance_id.clone(),
            system_id: options.system_id.clone(),
            shots: options.shots,
        };
        let demos = sample_demonstrations(inst, train, &targets, options.shots as usize, options.seed)?;
        if !demos.is_empty() {
            demonstrations.insert(
                inst.instance_id.clone(),
                demos.iter().map(|d| d.instance_id.clone()).collect(),
            );
        }
        if !done.contains(&key) {
            pending.push((inst, demos));
        }
    }
    if let Some(limit) = options.limit {
        pending.truncate(limit);
    }

    let mut out = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&pred_path)
        .map_err(|e| HarnessError::io(&pred_path, e))?;

    let attempt = |inst: &Instance, demos: &[&Instance]| -> Attempt {
        let demos: Vec<Demonstration> = demos.iter().map(|d| Demonstration::from_reference(d)).collect();
        let prompt = match fit_prompt(inst, &demos, template, backend.context_limit(), options.truncate) {
            Ok(p) => p,
            Err(e) => {
                return Attempt::Skipped(SkipRecord {
                    instance_id: inst.instance_id.clone(),
                    reason: e.to_string(),
                })
            }
        };
        let mut last = BackendError("no attempt made".into());
        for n in 1..=options.max_attempts.max(1) {
            match backend.generate(&prompt, params) {
                Ok(text) if !text.trim().is_empty() => {
                    return Attempt::Done(GeneratedSummary {
                        instance_id: inst.instance_id.clone(),
                        system_id: options.system_id.clone(),
                        text: text.trim().to_string(),
                        shots: options.shots,
                    })
                }
                Ok(_) => last = BackendError("empty generation".into()),
                Err(e) => last = e,
            }
            log::debug!("{}: attempt {n} failed: {last}", inst.instance_id);
        }
        let err = HarnessError::BackendFailure {
            instance_id: inst.instance_id.clone(),
            attempts: options.max_attempts.max(1),
            source: last,
        };
        log::warn!("{err}");
        Attempt::Skipped(SkipRecord {
            instance_id: inst.instance_id.clone(),
            reason: err.to_string(),
        })
    };

    let workers = options.jobs.max(1).min(backend.max_concurrency().max(1));
    let mut skipped = Vec::new();
    for chunk in pending.chunks(workers) {
        let results: Vec<Attempt> = if workers == 1 {
            chunk.iter().map(|(inst, demos)| attempt(inst, demos)).collect()
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|(inst, demos)| {
                        let attempt = &attempt;
                        scope.spawn(move || attempt(inst, demos))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("generation worker panicked"))
                    .collect()
            })
        };
        for result in results {
            match result {
                Attempt::Done(summary) => {
                    out.write_all(to_json_line(&summary).as_bytes())
                        .and_then(|_| out.write_all(b"\n"))
                        .and_then(|_| out.flush())
                        .map_err(|e| HarnessError::io(&pred_path, e))?;
                    summaries.push(summary);
                }
                Attempt::Skipped(record) => skipped.push(record),
            }
        }
    }

    let manifest = RunManifest {
        backend: backend.id(),
        system_id: options.system_id.clone(),
        shots: options.shots,
        params: params.clone(),
        template_hash: template.hash(),
        seed: options.seed,
        truncate: options.truncate,
        requested: instances.len(),
        completed: summaries.len(),
        resumed,
        skipped,
        demonstrations,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(|e| HarnessError::io(&manifest_path, e))?;

    let attempted = pending.len();
    let n_skipped = manifest.skipped.len();
    if attempted > 0 && n_skipped as f64 / attempted as f64 > options.max_skip_rate {
        return Err(HarnessError::SkipRateExceeded {
            skipped: n_skipped,
            attempted,
            max_rate: options.max_skip_rate,
        });
    }
    Ok(RunOutcome {
        summaries,
        manifest,
        predictions_path: pred_path,
        manifest_path,
    })
}
