//! Overlap and embedding metrics.
//!
//! Tokenization ("metric tokenizer v1"): lowercase, then every maximal run of
//! alphanumeric characters is a token and every other non-space character is
//! a token of its own.
//!
//! BLEU-n uses uniform weights over orders `1..=n` and the standard brevity
//! penalty. A zero count at order `k ≥ 2` is smoothed to `1 / (total_k + 1)`;
//! a zero unigram count makes the score 0. ROUGE-L is the LCS F-measure with
//! `β = 1.2`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::modelkit::{cosine, EmbeddingBackend};

pub const TOKENIZER_VERSION: &str = "v1";
pub const ROUGE_BETA: f64 = 1.2;

pub fn tokenize_v1(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.to_lowercase().chars() {
        if ch.is_alphanumeric() {
            cur.push(ch);
            continue;
        }
        if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        if !ch.is_whitespace() {
            out.push(ch.to_string());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU-n of `candidate` against a single `reference`, in `[0, 1]`.
pub fn bleu_n(candidate: &str, reference: &str, n: usize) -> f64 {
    let c = tokenize_v1(candidate);
    let r = tokenize_v1(reference);
    if c.is_empty() || r.is_empty() || n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let cand = ngram_counts(&c, k);
        let refs = ngram_counts(&r, k);
        let matches: usize = cand.iter().map(|(g, &cnt)| cnt.min(*refs.get(g).unwrap_or(&0))).sum();
        let total = c.len().saturating_sub(k - 1);
        let p = if matches > 0 {
            matches as f64 / total as f64
        } else if k == 1 {
            return 0.0;
        } else {
            1.0 / (total as f64 + 1.0)
        };
        log_sum += p.ln() / n as f64;
    }
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    bp * log_sum.exp()
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
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

/// ROUGE-L F-measure of `candidate` against a single `reference`, in `[0, 1]`.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    let c = tokenize_v1(candidate);
    let r = tokenize_v1(reference);
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&c, &r) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / c.len() as f64;
    let rec = lcs / r.len() as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * rec * p / (rec + b2 * p)
}

/// Mean over generated items of their best score against any reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub value: f64,
    /// Set when there was nothing to score; `value` is then 0.
    pub empty_generated: bool,
}

pub fn aggregate_max_over_refs(
    generated: &[String],
    references: &[String],
    metric: impl Fn(&str, &str) -> f64,
) -> Result<Aggregate> {
    if references.is_empty() {
        return Err(Error::data("max-over-references needs at least one reference"));
    }
    if generated.is_empty() {
        return Ok(Aggregate { value: 0.0, empty_generated: true });
    }
    let total: f64 = generated
        .iter()
        .map(|g| references.iter().map(|r| metric(g, r)).fold(f64::NEG_INFINITY, f64::max))
        .sum();
    Ok(Aggregate { value: total / generated.len() as f64, empty_generated: false })
}

/// Sentence-level semantic similarity: mean over generated items of the best
/// cosine to any reference, floored at 0.
pub fn embed_score(generated: &[String], references: &[String], embedder: &dyn EmbeddingBackend) -> Result<Aggregate> {
    let refs: Vec<Vec<f32>> = references.iter().map(|r| embedder.embed(r)).collect::<Result<_, _>>()?;
    let gens: Vec<Vec<f32>> = generated.iter().map(|g| embedder.embed(g)).collect::<Result<_, _>>()?;
    let index: HashMap<&str, usize> = generated.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    let ref_index: HashMap<&str, usize> = references.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    aggregate_max_over_refs(generated, references, |g, r| cosine(&gens[index[g]], &refs[ref_index[r]]).max(0.0))
}
