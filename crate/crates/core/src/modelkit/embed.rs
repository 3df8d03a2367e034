use std::collections::HashMap;

use crate::error::BackendError;
use crate::tagging::{lemmatize, tokenize};
use crate::text::fnv1a;

/// Sentence embedder. The same text must always map to the same vector, and
/// every vector from one instance has the same dimension.
pub trait EmbeddingBackend: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f32>, BackendError>;
}

/// Cosine similarity in `[-1, 1]`; zero when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Feature-hashing sentence embedder over lemmas, lemma bigrams and
/// character trigrams, L2-normalised. Needs no model files.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder { dim: 512 }
    }
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        HashingEmbedder { dim }
    }

    fn add(&self, v: &mut [f32], feature: &str, weight: f32) {
        let h = fnv1a(feature.as_bytes());
        let idx = (h % self.dim as u64) as usize;
        let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
        v[idx] += sign * weight;
    }
}

impl EmbeddingBackend for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, BackendError> {
        let mut v = vec![0.0f32; self.dim];
        let words: Vec<String> = tokenize(&text.to_lowercase())
            .into_iter()
            .filter(|t| t.text.chars().any(char::is_alphanumeric))
            .map(|t| t.text)
            .collect();
        let lemmas: Vec<String> = words.iter().map(|w| lemmatize(w)).collect();
        for l in &lemmas {
            self.add(&mut v, &format!("u:{l}"), 1.0);
        }
        for pair in lemmas.windows(2) {
            self.add(&mut v, &format!("b:{} {}", pair[0], pair[1]), 0.5);
        }
        for w in &words {
            let chars: Vec<char> = format!("#{w}#").chars().collect();
            for tri in chars.windows(3) {
                self.add(&mut v, &format!("c:{}", tri.iter().collect::<String>()), 0.25);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }
}

/// Fixed text → vector table, for tests and recorded embeddings.
#[derive(Debug, Clone, Default)]
pub struct TableEmbedder {
    dim: usize,
    table: HashMap<String, Vec<f32>>,
}

impl TableEmbedder {
    pub fn new(dim: usize) -> Self {
        TableEmbedder { dim, table: HashMap::new() }
    }

    pub fn with(mut self, text: impl Into<String>, vector: Vec<f32>) -> Self {
        assert_eq!(vector.len(), self.dim, "vector dimension");
        self.table.insert(text.into(), vector);
        self
    }
}

impl EmbeddingBackend for TableEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, BackendError> {
        self.table.get(text).cloned().ok_or_else(|| BackendError::new(format!("no embedding for {text:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashing_embedder_is_deterministic_and_normalised() {
        let e = HashingEmbedder::default();
        let a = e.embed("John does not like Mary").unwrap();
        assert_eq!(a, e.embed("John does not like Mary").unwrap());
        assert_eq!(a.len(), e.dim());
        let norm: f32 = a.iter().map(|x| x * x).sum::<f32>().sqrt();
        assert!((norm - 1.0).abs() < 1e-5);
    }

    #[test]
    fn related_sentences_are_closer() {
        let e = HashingEmbedder::default();
        let a = e.embed("they get into a fight").unwrap();
        let b = e.embed("they get into an argument").unwrap();
        let c = e.embed("the roses will die").unwrap();
        assert!(cosine(&a, &b) > cosine(&a, &c));
    }

    #[test]
    fn cosine_edge_cases() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((cosine(&[2.0, 0.0], &[1.0, 0.0]) - 1.0).abs() < 1e-12);
        assert_eq!(HashingEmbedder::default().embed("").unwrap().iter().filter(|x| **x != 0.0).count(), 0);
    }
}
