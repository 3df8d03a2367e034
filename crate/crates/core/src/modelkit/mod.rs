//! Backend contracts for generation, embedding and NLI models, plus the
//! fine-tuning loop and beam-search generation wrappers.
//!
//! Concrete backends:
//! - [`TinySeq2Seq`]: a small trainable neural encoder-decoder with beam
//!   search, usable end to end on a CPU.
//! - [`FixtureSeq2Seq`]: replays fixed beams per prompt.
//! - [`HashingEmbedder`] / [`TableEmbedder`]: sentence embedders.
//! - [`LexicalNli`] / [`TableNli`]: NLI classifiers.

mod embed;
mod nli;
mod optim;
mod stub;
mod tiny;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use embed::{cosine, EmbeddingBackend, HashingEmbedder, TableEmbedder};
pub use nli::{LexicalNli, NliBackend, NliDistribution, NliFixtureLine, NliLabel, TableNli};
pub use optim::AdamW;
pub use stub::FixtureSeq2Seq;
pub use tiny::{TinyConfig, TinySeq2Seq};

use crate::error::{BackendError, Error, Result};
use crate::seqio::{parse_prompt, special_tokens, TrainingExample};
use crate::text::collapse_whitespace;

/// One decoded sequence with its backend log-likelihood. Scores are only
/// comparable within a single backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub text: String,
    pub score: f64,
}

impl Beam {
    pub fn new(text: impl Into<String>, score: f64) -> Self {
        Beam { text: text.into(), score }
    }
}

/// A trainable sequence-to-sequence model.
pub trait Seq2SeqBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Makes the tokenizer treat `tokens` as atomic. Must be idempotent.
    fn register_special_tokens(&mut self, tokens: &[&str]);

    fn special_tokens(&self) -> Vec<String>;

    /// Beam-search decode. Deterministic for a fixed model and config.
    fn generate(&self, input: &str, config: &GenerationConfig) -> Result<Vec<Beam>, BackendError>;

    /// Resets optimizer state before a training run.
    fn begin_training(&mut self, config: &TrainConfig) -> Result<(), BackendError>;

    /// One optimizer step on `batch` at learning rate `lr`; returns the mean
    /// token loss measured before the update.
    fn train_step(&mut self, batch: &[TrainingExample], lr: f64) -> Result<f64, BackendError>;

    /// Length of `text` under the backend's own tokenizer.
    fn count_tokens(&self, text: &str) -> usize;

    fn save(&self, dir: &Path) -> Result<(), BackendError>;

    /// Whether `generate` may be called concurrently.
    fn reentrant(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adamw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    #[default]
    Constant,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub weight_decay: f64,
    pub seed: u64,
    /// Global gradient-norm clip; off when `None`.
    pub grad_clip: Option<f64>,
    pub warmup_steps: usize,
    pub schedule: LrSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 2,
            batch_size: 8,
            learning_rate: 1e-5,
            optimizer: OptimizerKind::Adamw,
            weight_decay: 0.01,
            seed: 42,
            grad_clip: None,
            warmup_steps: 0,
            schedule: LrSchedule::Constant,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        // zero is accepted so that a run can be checked to be a no-op
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("invalid learning rate {}", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::config(format!("invalid weight decay {}", self.weight_decay)));
        }
        if self.grad_clip.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::config("grad_clip must be positive"));
        }
        Ok(())
    }

    /// Learning rate for 0-based `step` out of `total` steps.
    pub fn lr_at(&self, step: usize, total: usize) -> f64 {
        let base = self.learning_rate;
        if step < self.warmup_steps {
            return base * (step + 1) as f64 / self.warmup_steps as f64;
        }
        match self.schedule {
            LrSchedule::Constant => base,
            LrSchedule::Linear => {
                let span = total.saturating_sub(self.warmup_steps).max(1) as f64;
                base * (1.0 - (step - self.warmup_steps) as f64 / span).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub beam_size: usize,
    pub max_tokens: usize,
    pub num_return: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig { beam_size: 5, max_tokens: 50, num_return: 5 }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_return < 1 || self.num_return > self.beam_size {
            return Err(Error::config(format!(
                "num_return must be in 1..={} (beam_size), got {}",
                self.beam_size, self.num_return
            )));
        }
        if self.max_tokens < 1 {
            return Err(Error::config("max_tokens must be at least 1"));
        }
        Ok(())
    }
}

fn strip_specials(text: &str, specials: &[String]) -> String {
    let kept: Vec<&str> = text.split_whitespace().filter(|w| !specials.iter().any(|s| s == w)).collect();
    collapse_whitespace(&kept.join(" "))
}

/// Decodes `prompt` and post-processes the beams: special tokens stripped,
/// over-length sequences dropped, best-first, at most `num_return`.
pub fn generate(backend: &dyn Seq2SeqBackend, prompt: &str, config: &GenerationConfig) -> Result<Vec<Beam>> {
    config.validate()?;
    parse_prompt(prompt)?;
    let mut specials = backend.special_tokens();
    specials.extend(special_tokens().iter().map(|s| s.to_string()));
    let mut beams: Vec<Beam> = backend
        .generate(prompt, config)?
        .into_iter()
        .map(|b| Beam { text: strip_specials(&b.text, &specials), score: b.score })
        .filter(|b| {
            let n = backend.count_tokens(&b.text);
            if n > config.max_tokens {
                warn!("{}: dropping beam of {n} tokens (max {})", backend.name(), config.max_tokens);
            }
            n <= config.max_tokens
        })
        .collect();
    beams.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
    beams.truncate(config.num_return);
    Ok(beams)
}

/// Generates for many prompts. Results are keyed by prompt, so they do not
/// depend on input order; one failing prompt does not affect the others.
/// `progress(done, total)` is called after each prompt.
pub fn batch_generate(
    backend: &dyn Seq2SeqBackend,
    prompts: &[String],
    config: &GenerationConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> BTreeMap<String, Result<Vec<Beam>>> {
    let mut unique: Vec<&String> = prompts.iter().collect();
    unique.sort();
    unique.dedup();
    let total = unique.len();
    let done = Mutex::new(0usize);
    let run = |p: &&String| {
        let out = generate(backend, p, config);
        let mut d = done.lock().unwrap();
        *d += 1;
        progress(*d, total);
        ((*p).clone(), out)
    };
    if backend.reentrant() {
        unique.par_iter().map(run).collect()
    } else {
        unique.iter().map(run).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub epoch: usize,
    pub step: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    /// Per-epoch loss: step losses weighted by target tokens, so a short
    /// final batch does not skew the mean.
    pub epoch_losses: Vec<f64>,
    pub steps: Vec<LossPoint>,
}

/// Continues training `backend` on `examples`.
///
/// Runs `epochs × ceil(N / batch_size)` optimizer steps over a seeded
/// per-epoch shuffle and returns the loss history. Special tokens are
/// registered before the first step.
pub fn fine_tune(
    backend: &mut dyn Seq2SeqBackend,
    examples: &[TrainingExample],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::config("fine_tune needs at least one example"));
    }
    backend.register_special_tokens(&special_tokens());
    backend.begin_training(config)?;

    let steps_per_epoch = examples.len().div_ceil(config.batch_size);
    let total = steps_per_epoch * config.epochs;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut report = TrainReport::default();
    let mut step = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut weight) = (0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<TrainingExample> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let loss = backend.train_step(&batch, config.lr_at(step, total))?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { step, batch: chunk.to_vec() });
            }
            report.steps.push(LossPoint { epoch: epoch + 1, step: step + 1, loss });
            // target tokens plus the end marker
            let w: usize = batch.iter().map(|ex| backend.count_tokens(&ex.target) + 1).sum();
            sum += loss * w as f64;
            weight += w as f64;
            step += 1;
        }
        report.epoch_losses.push(sum / weight);
    }
    Ok(report)
}

/// Layout of a training run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root.join("model"))?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn open(root: &Path) -> Result<Self> {
        if !root.join("model").is_dir() {
            return Err(Error::config(format!("{} is not a run directory", root.display())));
        }
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn model_dir(&self) -> PathBuf {
        self.root.join("model")
    }

    pub fn write_config<T: Serialize>(&self, config: &T) -> Result<()> {
        fs::write(self.root.join("config.json"), serde_json::to_string_pretty(config)? + "\n")?;
        Ok(())
    }

    /// `epoch,step,loss` CSV.
    pub fn write_losses(&self, report: &TrainReport) -> Result<()> {
        let mut w = csv::Writer::from_path(self.root.join("loss.csv"))?;
        w.write_record(["epoch", "step", "loss"])?;
        for p in &report.steps {
            w.write_record([p.epoch.to_string(), p.step.to_string(), format!("{:.8}", p.loss)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_model(&self, backend: &dyn Seq2SeqBackend) -> Result<()> {
        backend.save(&self.model_dir())?;
        let mut f = fs::File::create(self.root.join("special_tokens.json"))?;
        f.write_all((serde_json::to_string_pretty(&backend.special_tokens())? + "\n").as_bytes())?;
        Ok(())
    }

    pub fn persist<T: Serialize>(&self, config: &T, report: &TrainReport, backend: &dyn Seq2SeqBackend) -> Result<()> {
        self.write_config(config)?;
        self.write_losses(report)?;
        self.write_model(backend)
    }
}
