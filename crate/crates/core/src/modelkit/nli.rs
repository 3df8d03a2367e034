use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BackendError, Error, Result};
use crate::schema::read_jsonl;
use crate::tagging::{lemmatize, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

/// Class probabilities for one premise/hypothesis pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliDistribution {
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

impl NliDistribution {
    /// Checks that the probabilities are finite, non-negative and sum to 1.
    pub fn new(entailment: f64, neutral: f64, contradiction: f64) -> Result<Self, BackendError> {
        let d = NliDistribution { entailment, neutral, contradiction };
        d.validate()?;
        Ok(d)
    }

    pub fn one_hot(label: NliLabel) -> Self {
        let mut d = NliDistribution { entailment: 0.0, neutral: 0.0, contradiction: 0.0 };
        match label {
            NliLabel::Entailment => d.entailment = 1.0,
            NliLabel::Neutral => d.neutral = 1.0,
            NliLabel::Contradiction => d.contradiction = 1.0,
        }
        d
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let ps = [self.entailment, self.neutral, self.contradiction];
        if ps.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(BackendError::new(format!("invalid NLI probabilities {ps:?}")));
        }
        let sum: f64 = ps.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(BackendError::new(format!("NLI probabilities sum to {sum}")));
        }
        Ok(())
    }

    pub fn prob(&self, label: NliLabel) -> f64 {
        match label {
            NliLabel::Entailment => self.entailment,
            NliLabel::Neutral => self.neutral,
            NliLabel::Contradiction => self.contradiction,
        }
    }

    /// Most probable label. Exact ties go to neutral, then entailment.
    pub fn argmax(&self) -> NliLabel {
        let mut best = NliLabel::Neutral;
        for label in [NliLabel::Entailment, NliLabel::Contradiction] {
            if self.prob(label) > self.prob(best) {
                best = label;
            }
        }
        best
    }
}

/// Three-way natural language inference classifier.
pub trait NliBackend: Send + Sync {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliDistribution, BackendError>;
}

const NEGATIONS: [&str; 7] = ["not", "n't", "no", "never", "nobody", "nothing", "without"];
const FUNCTION_WORDS: [&str; 31] = [
    "a", "an", "the", "to", "of", "and", "or", "in", "on", "at", "for", "with", "by", "be", "is", "are", "was",
    "were", "it", "this", "that", "so", "when", "he", "she", "they", "him", "her", "his", "them", "their",
];

/// Content lemmas mapped to whether they occur under a negation. A negation
/// scopes over the next content word.
fn content_lemmas(text: &str) -> BTreeMap<String, bool> {
    let mut lemmas = BTreeMap::new();
    let mut pending_negation = false;
    for tok in tokenize(&text.to_lowercase()) {
        if !tok.text.chars().any(char::is_alphanumeric) {
            continue;
        }
        if NEGATIONS.contains(&tok.text.as_str()) {
            pending_negation = true;
            continue;
        }
        let lemma = lemmatize(&tok.text);
        if FUNCTION_WORDS.contains(&lemma.as_str()) || lemma == "do" {
            continue;
        }
        let negated = lemmas.entry(lemma).or_insert(false);
        *negated |= pending_negation;
        pending_negation = false;
    }
    lemmas
}

/// Lexical heuristic NLI. Coverage of the hypothesis by the premise drives
/// entailment; a shared word negated on one side only drives contradiction.
/// The probabilities are not calibrated.
#[derive(Debug, Clone, Default)]
pub struct LexicalNli;

impl NliBackend for LexicalNli {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliDistribution, BackendError> {
        let p = content_lemmas(premise);
        let h = content_lemmas(hypothesis);
        if h.is_empty() {
            return NliDistribution::new(0.1, 0.8, 0.1);
        }
        let shared = h.keys().filter(|l| p.contains_key(*l)).count();
        let coverage = shared as f64 / h.len() as f64;
        let clash = h.iter().any(|(l, neg)| p.get(l).is_some_and(|pn| pn != neg));
        let (e, c) = if clash { (0.05, 0.4 + 0.5 * coverage) } else { (0.1 + 0.8 * coverage, 0.05) };
        let n = (1.0 - e - c).max(0.0);
        let total = e + n + c;
        NliDistribution::new(e / total, n / total, c / total)
    }
}

/// One recorded NLI decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliFixtureLine {
    pub premise: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<NliDistribution>,
    /// When set, classifying this pair fails with this message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Table-driven NLI: answers from recorded pairs, falling back to a constant
/// label (if configured) for unseen pairs.
#[derive(Debug, Clone, Default)]
pub struct TableNli {
    table: HashMap<(String, String), std::result::Result<NliDistribution, String>>,
    fallback: Option<NliLabel>,
}

impl TableNli {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every unseen pair gets a one-hot `label`.
    pub fn constant(label: NliLabel) -> Self {
        TableNli { table: HashMap::new(), fallback: Some(label) }
    }

    pub fn with(mut self, premise: &str, hypothesis: &str, dist: NliDistribution) -> Self {
        self.table.insert((premise.to_string(), hypothesis.to_string()), Ok(dist));
        self
    }

    pub fn with_label(self, premise: &str, hypothesis: &str, label: NliLabel) -> Self {
        self.with(premise, hypothesis, NliDistribution::one_hot(label))
    }

    pub fn with_failure(mut self, premise: &str, hypothesis: &str, message: &str) -> Self {
        self.table.insert((premise.to_string(), hypothesis.to_string()), Err(message.to_string()));
        self
    }

    pub fn from_lines(lines: Vec<NliFixtureLine>) -> Result<Self> {
        let mut t = TableNli::new();
        for line in lines {
            let entry = match (line.distribution, line.error) {
                (Some(d), None) => {
                    d.validate().map_err(|e| Error::data(e.0))?;
                    Ok(d)
                }
                (None, Some(msg)) => Err(msg),
                _ => {
                    return Err(Error::data(format!(
                        "NLI fixture for {:?} needs exactly one of distribution/error",
                        line.hypothesis
                    )))
                }
            };
            t.table.insert((line.premise, line.hypothesis), entry);
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_lines(read_jsonl(path)?)
    }
}

impl NliBackend for TableNli {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliDistribution, BackendError> {
        match self.table.get(&(premise.to_string(), hypothesis.to_string())) {
            Some(Ok(d)) => Ok(*d),
            Some(Err(msg)) => Err(BackendError::new(msg.clone())),
            None => match self.fallback {
                Some(label) => Ok(NliDistribution::one_hot(label)),
                None => Err(BackendError::new(format!("no NLI entry for ({premise:?}, {hypothesis:?})"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_validation() {
        assert!(NliDistribution::new(0.5, 0.3, 0.2).is_ok());
        assert!(NliDistribution::new(0.5, 0.3, 0.3).is_err());
        assert!(NliDistribution::new(-0.1, 0.6, 0.5).is_err());
        assert!(NliDistribution::new(f64::NAN, 0.5, 0.5).is_err());
    }

    #[test]
    fn argmax_ties_prefer_neutral() {
        let d = NliDistribution::new(0.4, 0.4, 0.2).unwrap();
        assert_eq!(d.argmax(), NliLabel::Neutral);
        let d = NliDistribution::new(0.6, 0.2, 0.2).unwrap();
        assert_eq!(d.argmax(), NliLabel::Entailment);
        let d = NliDistribution::new(0.1, 0.2, 0.7).unwrap();
        assert_eq!(d.argmax(), NliLabel::Contradiction);
    }

    #[test]
    fn lexical_nli_directions() {
        let nli = LexicalNli;
        let premise = "John insulted Mary, so she didn't reply when he called her.";
        assert_eq!(nli.classify(premise, "Mary was insulted by John").unwrap().argmax(), NliLabel::Entailment);
        assert_eq!(nli.classify(premise, "Mary replied to John").unwrap().argmax(), NliLabel::Contradiction);
        assert_eq!(nli.classify(premise, "the weather was sunny").unwrap().argmax(), NliLabel::Neutral);
    }

    #[test]
    fn table_nli_modes() {
        let t = TableNli::new().with_label("p", "h", NliLabel::Contradiction).with_failure("p", "bad", "boom");
        assert_eq!(t.classify("p", "h").unwrap().argmax(), NliLabel::Contradiction);
        assert_eq!(t.classify("p", "bad").unwrap_err().0, "boom");
        assert!(t.classify("p", "other").is_err());
        assert_eq!(TableNli::constant(NliLabel::Entailment).classify("x", "y").unwrap().argmax(), NliLabel::Entailment);
    }
}
