//! Flat key-value run configuration shared by the command-line stages.
//!
//! ```toml
//! corpus_dir = "data"
//! predictions_dir = "predictions"
//! report_dir = "reports"
//! seed = 0
//! jobs = 1
//! backend = "openai"            # echo | openai
//! openai_base_url = "http://localhost:8000/v1"
//! openai_model = "glm-4-9b-chat"
//! discriminator = "containment" # containment | http
//! ```
//!
//! Relative paths resolve against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{
    EchoBackend, GenerationBackend, GenerationParams, OpenAiCompatBackend, OpenAiCompatConfig, PromptTemplate,
};
use crate::recall::{ContainmentOracle, Discriminator, HttpDiscriminator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    pub predictions_dir: PathBuf,
    pub report_dir: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    /// Prompt template file; the bundled template when unset.
    pub template: Option<PathBuf>,

    pub backend: String,
    pub echo_tail_chars: usize,
    pub openai_base_url: Option<String>,
    pub openai_model: Option<String>,
    pub openai_api_key_env: String,
    pub openai_context_limit: Option<usize>,
    pub openai_max_concurrency: usize,
    pub openai_timeout_secs: u64,
    pub temperature: f64,
    pub max_output_length: Option<usize>,

    pub discriminator: String,
    /// Endpoint of the `http` discriminator; may contain `{kind}`.
    pub discriminator_url: Option<String>,
    pub discriminator_max_in_flight: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus_dir: "data".into(),
            predictions_dir: "predictions".into(),
            report_dir: "reports".into(),
            seed: 0,
            jobs: 1,
            template: None,
            backend: "echo".into(),
            echo_tail_chars: 160,
            openai_base_url: None,
            openai_model: None,
            openai_api_key_env: "OPENAI_API_KEY".into(),
            openai_context_limit: None,
            openai_max_concurrency: 1,
            openai_timeout_secs: 300,
            temperature: crate::harness::DEFAULT_TEMPERATURE,
            max_output_length: None,
            discriminator: "containment".into(),
            discriminator_url: None,
            discriminator_max_in_flight: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

pub const BACKENDS: [&str; 2] = ["echo", "openai"];
pub const DISCRIMINATORS: [&str; 2] = ["containment", "http"];

impl RunConfig {
    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let unreadable = |reason: String| ConfigError::Unreadable {
            path: path.to_path_buf(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| unreadable(e.to_string()))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| unreadable(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        Ok(config)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_dir);
        fix(&mut self.predictions_dir);
        fix(&mut self.report_dir);
        if let Some(t) = self.template.as_mut() {
            fix(t);
        }
    }

    /// Every problem with the configuration, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !BACKENDS.contains(&self.backend.as_str()) {
            out.push(format!(
                "backend {:?} is not one of {}",
                self.backend,
                BACKENDS.join(", ")
            ));
        }
        if self.backend == "openai" {
            if self.openai_base_url.is_none() {
                out.push("backend openai needs openai_base_url".into());
            }
            if self.openai_model.is_none() {
                out.push("backend openai needs openai_model".into());
            }
        }
        if self.echo_tail_chars == 0 {
            out.push("echo_tail_chars must be positive".into());
        }
        if !DISCRIMINATORS.contains(&self.discriminator.as_str()) {
            out.push(format!(
                "discriminator {:?} is not one of {}",
                self.discriminator,
                DISCRIMINATORS.join(", ")
            ));
        }
        if self.discriminator == "http" && self.discriminator_url.is_none() {
            out.push("discriminator http needs discriminator_url".into());
        }
        if self.jobs == 0 {
            out.push("jobs must be at least 1".into());
        }
        if let Err(e) = self.generation_params().validate() {
            out.push(e.to_string());
        }
        if let Some(t) = &self.template {
            if let Err(e) = PromptTemplate::load(t) {
                out.push(format!("template: {e}"));
            }
        }
        for (name, dir) in [
            ("predictions_dir", &self.predictions_dir),
            ("report_dir", &self.report_dir),
        ] {
            if dir.exists() && !dir.is_dir() {
                out.push(format!("{name} {} is not a directory", dir.display()));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(p))
        }
    }

    pub fn generation_params(&self) -> GenerationParams {
        GenerationParams {
            temperature: self.temperature,
            max_output_length: self.max_output_length,
            seed: Some(self.seed),
        }
    }

    pub fn template(&self) -> Result<PromptTemplate, ConfigError> {
        match &self.template {
            None => Ok(PromptTemplate::default()),
            Some(path) => PromptTemplate::load(path).map_err(|e| ConfigError::Unreadable {
                path: path.clone(),
                reason: e.to_string(),
            }),
        }
    }

    pub fn backend(&self) -> Result<Box<dyn GenerationBackend>, ConfigError> {
        self.validate()?;
        Ok(match self.backend.as_str() {
            "echo" => Box::new(EchoBackend {
                tail_chars: self.echo_tail_chars,
                context_limit: None,
            }),
            _ => Box::new(OpenAiCompatBackend::new(OpenAiCompatConfig {
                base_url: self.openai_base_url.clone().unwrap_or_default(),
                model: self.openai_model.clone().unwrap_or_default(),
                api_key_env: self.openai_api_key_env.clone(),
                context_limit: self.openai_context_limit,
                max_concurrency: self.openai_max_concurrency,
                timeout_secs: self.openai_timeout_secs,
            })),
        })
    }

    pub fn discriminator(&self) -> Result<Box<dyn Discriminator>, ConfigError> {
        self.validate()?;
        Ok(match self.discriminator.as_str() {
            "containment" => Box::new(ContainmentOracle),
            _ => Box::new(
                HttpDiscriminator::new(self.discriminator_url.clone().unwrap_or_default())
                    .with_max_in_flight(self.discriminator_max_in_flight),
            ),
        })
    }
}
