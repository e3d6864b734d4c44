//! Sentence-level embeddings used for relevance filtering and NLI negatives.

use thiserror::Error;

use crate::metrics::add_feature;
use crate::text::normalize_for_matching;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("embedding provider failed: {0}")]
pub struct ProviderError(pub String);

/// Maps texts to fixed-dimension vectors and compares them.
///
/// `similarity` defaults to cosine. Implementations must keep it symmetric
/// with `similarity(v, v) = 1` for any embedding they produce.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> String;

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, ProviderError>;

    fn similarity(&self, a: &[f32], b: &[f32]) -> f64 {
        cosine(a, b)
    }

    /// Similarity of each text in `texts` to `anchor`, in input order.
    fn score_against(&self, texts: &[&str], anchor: &str) -> Result<Vec<f64>, ProviderError> {
        let mut batch: Vec<&str> = Vec::with_capacity(texts.len() + 1);
        batch.push(anchor);
        batch.extend_from_slice(texts);
        let vectors = self.embed(&batch)?;
        if vectors.len() != batch.len() {
            return Err(ProviderError(format!(
                "expected {} embeddings, got {}",
                batch.len(),
                vectors.len()
            )));
        }
        let (anchor_vec, rest) = vectors.split_first().expect("batch is non-empty");
        Ok(rest.iter().map(|v| self.similarity(v, anchor_vec)).collect())
    }
}

/// Cosine similarity in `[-1, 1]`; zero vectors compare as 0.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Offline bag of hashed character unigrams and bigrams.
///
/// A lexical stand-in for a multilingual sentence encoder. Any non-empty
/// text embeds to a non-zero vector.
#[derive(Debug, Clone)]
pub struct HashedNgramEmbedder {
    pub dim: usize,
}

impl Default for HashedNgramEmbedder {
    fn default() -> Self {
        Self { dim: 1024 }
    }
}

impl HashedNgramEmbedder {
    fn embed_one(&self, text: &str) -> Vec<f32> {
        let chars: Vec<char> = normalize_for_matching(text).chars().collect();
        let mut v = vec![0f32; self.dim];
        for c in &chars {
            add_feature(&mut v, &format!("1:{c}"), 1.0);
        }
        for w in chars.windows(2) {
            add_feature(&mut v, &format!("2:{}{}", w[0], w[1]), 1.0);
        }
        v
    }
}

impl EmbeddingProvider for HashedNgramEmbedder {
    fn name(&self) -> String {
        format!("hashed-ngram-{}", self.dim)
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}
