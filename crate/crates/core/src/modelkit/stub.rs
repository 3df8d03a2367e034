use std::collections::HashMap;
use std::path::Path;

use super::{Beam, GenerationConfig, Seq2SeqBackend, TrainConfig};
use crate::error::BackendError;
use crate::seqio::TrainingExample;

/// Replays fixed beams per prompt. Training is a no-op with a loss of zero.
#[derive(Debug, Clone, Default)]
pub struct FixtureSeq2Seq {
    beams: HashMap<String, Result<Vec<Beam>, String>>,
    specials: Vec<String>,
    default: Option<Vec<Beam>>,
}

impl FixtureSeq2Seq {
    pub fn new() -> Self {
        Self::default()
    }

    /// Beams for `prompt`, scored by descending rank.
    pub fn with(mut self, prompt: impl Into<String>, texts: &[&str]) -> Self {
        let beams = texts.iter().enumerate().map(|(i, t)| Beam::new(*t, -(i as f64))).collect();
        self.beams.insert(prompt.into(), Ok(beams));
        self
    }

    pub fn with_beams(mut self, prompt: impl Into<String>, beams: Vec<Beam>) -> Self {
        self.beams.insert(prompt.into(), Ok(beams));
        self
    }

    pub fn with_failure(mut self, prompt: impl Into<String>, message: &str) -> Self {
        self.beams.insert(prompt.into(), Err(message.to_string()));
        self
    }

    /// Beams returned for prompts without an entry.
    pub fn with_default(mut self, texts: &[&str]) -> Self {
        self.default = Some(texts.iter().enumerate().map(|(i, t)| Beam::new(*t, -(i as f64))).collect());
        self
    }
}

impl Seq2SeqBackend for FixtureSeq2Seq {
    fn name(&self) -> &str {
        "fixture"
    }

    fn register_special_tokens(&mut self, tokens: &[&str]) {
        for t in tokens {
            if !self.specials.iter().any(|s| s == t) {
                self.specials.push(t.to_string());
            }
        }
    }

    fn special_tokens(&self) -> Vec<String> {
        self.specials.clone()
    }

    fn generate(&self, input: &str, config: &GenerationConfig) -> Result<Vec<Beam>, BackendError> {
        let beams = match self.beams.get(input) {
            Some(Ok(b)) => b.clone(),
            Some(Err(msg)) => return Err(BackendError::new(msg.clone())),
            None => self.default.clone().ok_or_else(|| BackendError::new(format!("no fixture for {input:?}")))?,
        };
        Ok(beams.into_iter().take(config.beam_size).collect())
    }

    fn begin_training(&mut self, _config: &TrainConfig) -> Result<(), BackendError> {
        Ok(())
    }

    fn train_step(&mut self, _batch: &[TrainingExample], _lr: f64) -> Result<f64, BackendError> {
        Ok(0.0)
    }

    fn count_tokens(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }

    fn save(&self, _dir: &Path) -> Result<(), BackendError> {
        Ok(())
    }

    fn reentrant(&self) -> bool {
        true
    }
}
