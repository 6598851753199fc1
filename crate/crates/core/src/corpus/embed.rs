use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};

pub const HASH_DIM: usize = 256;

/// Unit-L2 embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Normalizes `values` to unit length. A zero vector stays zero.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Self(values)
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// Anything that can turn text into a fixed-dimension vector.
pub trait Embedder: Send + Sync {
    /// Stable identifier recorded in the index header.
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    /// Raw (not necessarily normalized) vector for non-empty text.
    fn embed_raw(&self, text: &str) -> Result<Vec<f64>>;
}

/// Embeds `text`, rejecting blank input before any backend is called.
pub fn embed(text: &str, embedder: &dyn Embedder) -> Result<EmbeddingVector> {
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyText);
    }
    let raw = embedder.embed_raw(text)?;
    if raw.len() != embedder.dim() {
        return Err(CorpusError::DimensionMismatch { expected: embedder.dim(), found: raw.len() });
    }
    Ok(EmbeddingVector::normalized(raw))
}

/// Offline embedder: feature-hashed bag of lowercased word tokens.
///
/// Each token is hashed with 64-bit FNV-1a over its UTF-8 bytes and counted
/// in bucket `hash % dim`.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dim: HASH_DIM }
    }
}

impl HashEmbedder {
    pub fn with_dim(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim }
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.as_bytes()) % self.dim as u64) as usize
    }
}

impl Embedder for HashEmbedder {
    fn name(&self) -> String {
        format!("hash-fnv1a-{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim];
        let mut any = false;
        for token in tokens(text) {
            v[self.bucket(&token)] += 1.0;
            any = true;
        }
        if !any {
            v[self.bucket(text.trim())] += 1.0;
        }
        Ok(v)
    }
}

/// Lowercased word tokens: runs of alphanumerics, keeping inner apostrophes.
pub(crate) fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_cosine_is_one() {
        let e = HashEmbedder::default();
        for t in ["kula", "The canoe was launched at dawn.", "!!!"] {
            let v = embed(t, &e).unwrap();
            assert!((v.cosine(&v) - 1.0).abs() < 1e-9);
            assert!((v.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn disjoint_tokens_are_orthogonal() {
        let e = HashEmbedder::default();
        // buckets precomputed from the FNV-1a reference: kula → 182, yam → 134
        assert_eq!(e.bucket("kula"), 182);
        assert_eq!(e.bucket("yam"), 134);
        let a = embed("kula", &e).unwrap();
        let b = embed("yam", &e).unwrap();
        assert!(a.cosine(&b).abs() < 1e-9);
    }

    #[test]
    fn blank_text_rejected() {
        assert!(matches!(embed("   ", &HashEmbedder::default()), Err(CorpusError::EmptyText)));
        assert!(matches!(embed("", &HashEmbedder::default()), Err(CorpusError::EmptyText)));
    }

    #[test]
    fn tokens_lowercase_and_keep_apostrophes() {
        let t: Vec<_> = tokens("Vaygu'a, the KULA's 'gifts'").collect();
        assert_eq!(t, vec!["vaygu'a", "the", "kula's", "gifts"]);
    }
}
