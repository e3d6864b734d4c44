//! Lexical and semantic overlap between a generated summary and its reference.
//!
//! ROUGE-N and ROUGE-L operate on characters by default, which is the usual
//! unit for Chinese. Both sides are normalized first (width folding and
//! whitespace removal, see [`crate::text`]). [`semantic_f1`] is a greedy
//! token-matching score over an injected [`TokenEncoder`], i.e. BERTScore
//! without IDF weighting.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{fold_width, normalize_for_matching};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreTriple {
    pub const ZERO: ScoreTriple = ScoreTriple {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("token encoder failed: {0}")]
    EncoderFailure(String),
    #[error("token encoder returned vectors of mixed dimension ({0} vs {1})")]
    DimensionMismatch(usize, usize),
}

/// Scoring unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenMode {
    /// One token per character after normalization.
    #[default]
    Char,
    /// Whitespace-delimited words (for pre-segmented text).
    Word,
}

pub fn tokenize(text: &str, mode: TokenMode) -> Vec<String> {
    match mode {
        TokenMode::Char => normalize_for_matching(text).chars().map(String::from).collect(),
        TokenMode::Word => fold_width(text).split_whitespace().map(str::to_string).collect(),
    }
}

/// Character-level ROUGE-N.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Result<ScoreTriple, MetricError> {
    rouge_n_with(candidate, reference, n, TokenMode::Char)
}

pub fn rouge_n_with(candidate: &str, reference: &str, n: usize, mode: TokenMode) -> Result<ScoreTriple, MetricError> {
    rouge_n_tokens(&tokenize(candidate, mode), &tokenize(reference, mode), n)
}

/// ROUGE-N over pre-tokenized sequences with clipped (multiset) overlap.
pub fn rouge_n_tokens<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> Result<ScoreTriple, MetricError> {
    if n == 0 {
        return Err(MetricError::InvalidOrder(n));
    }
    if candidate.len() < n || reference.len() < n {
        return Ok(ScoreTriple::ZERO);
    }
    let mut ref_counts: HashMap<&[T], usize> = HashMap::new();
    for gram in reference.windows(n) {
        *ref_counts.entry(gram).or_default() += 1;
    }
    let mut overlap = 0usize;
    for gram in candidate.windows(n) {
        if let Some(left) = ref_counts.get_mut(gram) {
            if *left > 0 {
                *left -= 1;
                overlap += 1;
            }
        }
    }
    let cand_total = candidate.len() + 1 - n;
    let ref_total = reference.len() + 1 - n;
    Ok(ScoreTriple::from_precision_recall(
        overlap as f64 / cand_total as f64,
        overlap as f64 / ref_total as f64,
    ))
}

/// Character-level ROUGE-L.
pub fn rouge_l(candidate: &str, reference: &str) -> ScoreTriple {
    rouge_l_with(candidate, reference, TokenMode::Char)
}

pub fn rouge_l_with(candidate: &str, reference: &str, mode: TokenMode) -> ScoreTriple {
    rouge_l_tokens(&tokenize(candidate, mode), &tokenize(reference, mode))
}

pub fn rouge_l_tokens<T: Eq>(candidate: &[T], reference: &[T]) -> ScoreTriple {
    if candidate.is_empty() || reference.is_empty() {
        return ScoreTriple::ZERO;
    }
    let l = lcs_len(candidate, reference) as f64;
    ScoreTriple::from_precision_recall(l / candidate.len() as f64, l / reference.len() as f64)
}

/// Longest common subsequence length, O(|a|·|b|) time and O(|b|) space.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Produces contextual token vectors for [`semantic_f1`].
pub trait TokenEncoder {
    /// Identifier recorded in report metadata.
    fn name(&self) -> String;

    fn encode(&self, text: &str) -> Result<Vec<(String, Vec<f32>)>, MetricError>;
}

/// Greedy cosine matching of token vectors.
///
/// Recall averages, over reference tokens, the best cosine similarity to any
/// candidate token; precision does the same from the candidate side. Negative
/// similarities are floored at zero so every component stays in `[0, 1]`.
pub fn semantic_f1(candidate: &str, reference: &str, encoder: &dyn TokenEncoder) -> Result<ScoreTriple, MetricError> {
    let cand = encoder.encode(candidate)?;
    let refs = encoder.encode(reference)?;
    if cand.is_empty() || refs.is_empty() {
        return Ok(ScoreTriple::ZERO);
    }
    let dim = refs[0].1.len();
    if let Some((_, v)) = cand.iter().chain(refs.iter()).find(|(_, v)| v.len() != dim) {
        return Err(MetricError::DimensionMismatch(dim, v.len()));
    }
    let cand_unit: Vec<Vec<f64>> = cand.iter().map(|(_, v)| unit(v)).collect();
    let ref_unit: Vec<Vec<f64>> = refs.iter().map(|(_, v)| unit(v)).collect();

    let sim: Vec<Vec<f64>> = ref_unit
        .iter()
        .map(|r| cand_unit.iter().map(|c| dot(r, c).clamp(0.0, 1.0)).collect())
        .collect();

    let recall = sim
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .sum::<f64>()
        / ref_unit.len() as f64;
    let precision = (0..cand_unit.len())
        .map(|j| sim.iter().map(|row| row[j]).fold(0.0, f64::max))
        .sum::<f64>()
        / cand_unit.len() as f64;
    Ok(ScoreTriple::from_precision_recall(precision, recall))
}

fn unit(v: &[f32]) -> Vec<f64> {
    let norm = v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| *x as f64 / norm).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Offline encoder: one token per character, each vector built from hashed
/// features of the character and its immediate neighbours.
///
/// It carries no pretrained semantics; it exists so pipelines run without a
/// model server. Identical characters in identical context encode identically.
#[derive(Debug, Clone)]
pub struct HashedCharEncoder {
    pub dim: usize,
    /// Weight of the neighbour features relative to the character itself.
    pub context_weight: f32,
}

impl Default for HashedCharEncoder {
    fn default() -> Self {
        Self {
            dim: 256,
            context_weight: 0.25,
        }
    }
}

impl TokenEncoder for HashedCharEncoder {
    fn name(&self) -> String {
        format!("hashed-char-{}", self.dim)
    }

    fn encode(&self, text: &str) -> Result<Vec<(String, Vec<f32>)>, MetricError> {
        let chars: Vec<char> = normalize_for_matching(text).chars().collect();
        Ok(chars
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut v = vec![0f32; self.dim];
                add_feature(&mut v, &format!("c:{c}"), 1.0);
                if i > 0 {
                    add_feature(&mut v, &format!("l:{}", chars[i - 1]), self.context_weight);
                }
                if i + 1 < chars.len() {
                    add_feature(&mut v, &format!("r:{}", chars[i + 1]), self.context_weight);
                }
                (c.to_string(), v)
            })
            .collect())
    }
}

pub(crate) fn add_feature(v: &mut [f32], feature: &str, weight: f32) {
    let h = crate::hashing::fnv1a(feature.as_bytes());
    let idx = (h % v.len() as u64) as usize;
    let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
    v[idx] += sign * weight;
}
