//! A small encoder-decoder trained from scratch on CPU.
//!
//! The encoder is a bag of sparse input features (context words, target
//! words and their neighbours, relation-conditioned words) whose embeddings
//! are summed into a hidden state `h`. The decoder is a two-layer tanh MLP
//! over `h`, the two previous tokens and the position:
//!
//! ```text
//! u = tanh(h + P1[y_{t-1}] + P2[y_{t-2}] + Pos[t])
//! z = tanh(U·u + c)
//! p(y_t) = softmax(W·z + b)
//! ```
//!
//! Feature rows are created on first sight during training and start at
//! zero, so a zero learning rate leaves every prediction unchanged.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{AdamW, Beam, GenerationConfig, Seq2SeqBackend, TrainConfig};
use crate::error::BackendError;
use crate::seqio::{parse_prompt, TrainingExample};
use crate::tagging::tokenize;

const PAD: usize = 0;
const BOS: usize = 1;
const EOS: usize = 2;
const UNK: usize = 3;
const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

const G_F: usize = 0;
const G_P1: usize = 1;
const G_P2: usize = 2;
const G_POS: usize = 3;
const G_U: usize = 4;
const G_C: usize = 5;
const G_W: usize = 6;
const G_B: usize = 7;
const GROUPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TinyConfig {
    pub hidden: usize,
    pub max_positions: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TinyConfig {
    fn default() -> Self {
        TinyConfig { hidden: 64, max_positions: 64, seed: 42, init_scale: 0.1 }
    }
}

/// Splits target text into word tokens (letters, digits, apostrophes) and
/// single punctuation characters.
fn output_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '\'' {
            cur.push(ch);
        } else {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if !ch.is_whitespace() {
                out.push(ch.to_string());
            }
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn detokenize(tokens: &[&str]) -> String {
    let mut out = String::new();
    for tok in tokens {
        let attach = tok.len() == 1 && matches!(tok.chars().next(), Some('.' | ',' | '!' | '?' | ';' | ':'));
        if !out.is_empty() && !attach {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Sparse input features of a prompt, as (name, count) pairs.
fn prompt_features(input: &str) -> Result<Vec<(String, f32)>, BackendError> {
    let prompt = parse_prompt(input).map_err(|e| BackendError::new(e.to_string()))?;
    let rel = prompt.relation.name();
    let tokens: Vec<_> = tokenize(&prompt.context)
        .into_iter()
        .filter(|t| t.text.chars().any(char::is_alphanumeric))
        .collect();
    let mut counts: HashMap<String, f32> = HashMap::new();
    let mut add = |name: String| *counts.entry(name).or_insert(0.0) += 1.0;
    add(format!("r:{rel}"));
    for (i, tok) in tokens.iter().enumerate() {
        let w = tok.text.to_lowercase();
        if i < 3 {
            add(format!("p{i}:{w}"));
        }
        add(format!("w:{w}"));
        add(format!("r|w:{rel} {w}"));
    }
    if let Some(span) = prompt.target {
        let inside: Vec<usize> = (0..tokens.len()).filter(|&i| tokens[i].span.overlaps(&span)).collect();
        if let (Some(&first), Some(&last)) = (inside.first(), inside.last()) {
            for &i in &inside {
                let w = tokens[i].text.to_lowercase();
                add(format!("t:{w}"));
                add(format!("r|t:{rel} {w}"));
            }
            if first > 0 {
                let w = tokens[first - 1].text.to_lowercase();
                add(format!("tl:{w}"));
                add(format!("r|tl:{rel} {w}"));
            }
            if let Some(next) = tokens.get(last + 1) {
                let w = next.text.to_lowercase();
                add(format!("tr:{w}"));
                add(format!("r|tr:{rel} {w}"));
            }
        }
    }
    let mut feats: Vec<(String, f32)> = counts.into_iter().collect();
    feats.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(feats)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Saved {
    config: TinyConfig,
    vocab: Vec<String>,
    features: Vec<String>,
    specials: Vec<String>,
    params: Vec<Vec<f32>>,
}

#[derive(Clone)]
struct Optim {
    adam: AdamW,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    grad_clip: Option<f64>,
}

/// Small trainable seq2seq model with beam search.
#[derive(Clone)]
pub struct TinySeq2Seq {
    config: TinyConfig,
    vocab: Vec<String>,
    token_ids: HashMap<String, usize>,
    features: Vec<String>,
    feature_ids: HashMap<String, usize>,
    specials: Vec<String>,
    params: Vec<Vec<f32>>,
    optim: Option<Optim>,
}

/// Encoded prompt: known feature rows with weights, already scaled.
struct Encoded {
    rows: Vec<(usize, f32)>,
}

struct StepCache {
    u: Vec<f32>,
    z: Vec<f32>,
    logp: Vec<f32>,
}

impl TinySeq2Seq {
    /// New untrained model whose output vocabulary covers the words of
    /// `texts`.
    pub fn new<'a>(config: TinyConfig, texts: impl IntoIterator<Item = &'a str>) -> Self {
        let words: BTreeSet<String> = texts.into_iter().flat_map(output_tokens).collect();
        let mut vocab: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        vocab.extend(words);
        let h = config.hidden;
        let v = vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, config.init_scale).expect("init scale");
        let mut init = |n: usize| -> Vec<f32> { (0..n).map(|_| normal.sample(&mut rng) as f32).collect() };
        let mut params = vec![Vec::new(); GROUPS];
        params[G_P1] = init(v * h);
        params[G_P2] = init(v * h);
        params[G_POS] = init(config.max_positions * h);
        params[G_U] = init(h * h);
        params[G_C] = vec![0.0; h];
        params[G_W] = init(v * h);
        params[G_B] = vec![0.0; v];
        let token_ids = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TinySeq2Seq {
            config,
            vocab,
            token_ids,
            features: Vec::new(),
            feature_ids: HashMap::new(),
            specials: Vec::new(),
            params,
            optim: None,
        }
    }

    pub fn load(dir: &Path) -> Result<Self, BackendError> {
        let raw = fs::read_to_string(dir.join("tiny_seq2seq.json"))
            .map_err(|e| BackendError::new(format!("reading model from {}: {e}", dir.display())))?;
        let saved: Saved = serde_json::from_str(&raw).map_err(|e| BackendError::new(format!("model file: {e}")))?;
        let h = saved.config.hidden;
        let v = saved.vocab.len();
        let expected = [
            saved.features.len() * h,
            v * h,
            v * h,
            saved.config.max_positions * h,
            h * h,
            h,
            v * h,
            v,
        ];
        if saved.params.len() != GROUPS || saved.params.iter().zip(expected).any(|(p, n)| p.len() != n) {
            return Err(BackendError::new("model file: parameter shapes do not match the config"));
        }
        Ok(TinySeq2Seq {
            config: saved.config,
            token_ids: saved.vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect(),
            vocab: saved.vocab,
            feature_ids: saved.features.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect(),
            features: saved.features,
            specials: saved.specials,
            params: saved.params,
            optim: None,
        })
    }

    pub fn config(&self) -> &TinyConfig {
        &self.config
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    /// Mean per-token cross-entropy on `examples`, without updating.
    pub fn loss(&self, examples: &[TrainingExample]) -> Result<f64, BackendError> {
        let mut total = 0.0;
        let mut count = 0usize;
        for ex in examples {
            let enc = self.encode(&prompt_features(&ex.input)?);
            let h = self.hidden_state(&enc);
            let ys = self.target_ids(&ex.target);
            for t in 0..ys.len() {
                let (p1, p2) = prev_tokens(&ys, t);
                let cache = self.step(&h, p1, p2, t);
                total -= f64::from(cache.logp[ys[t]]);
                count += 1;
            }
        }
        Ok(if count == 0 { 0.0 } else { total / count as f64 })
    }

    fn target_ids(&self, text: &str) -> Vec<usize> {
        let mut ys: Vec<usize> =
            output_tokens(text).iter().map(|t| self.token_ids.get(t).copied().unwrap_or(UNK)).collect();
        ys.truncate(self.config.max_positions - 1);
        ys.push(EOS);
        ys
    }

    fn encode(&self, feats: &[(String, f32)]) -> Encoded {
        let total: f32 = feats.iter().map(|(_, c)| c).sum();
        let scale = if total > 0.0 { 1.0 / total.sqrt() } else { 0.0 };
        let rows = feats
            .iter()
            .filter_map(|(name, c)| self.feature_ids.get(name).map(|&i| (i, c * scale)))
            .collect();
        Encoded { rows }
    }

    fn encode_growing(&mut self, feats: &[(String, f32)]) -> Encoded {
        for (name, _) in feats {
            if !self.feature_ids.contains_key(name) {
                let id = self.features.len();
                self.features.push(name.clone());
                self.feature_ids.insert(name.clone(), id);
                let h = self.config.hidden;
                self.params[G_F].extend(std::iter::repeat_n(0.0, h));
                if let Some(opt) = &mut self.optim {
                    opt.m[G_F].extend(std::iter::repeat_n(0.0, h));
                    opt.v[G_F].extend(std::iter::repeat_n(0.0, h));
                }
            }
        }
        self.encode(feats)
    }

    fn hidden_state(&self, enc: &Encoded) -> Vec<f32> {
        let hd = self.config.hidden;
        let f = &self.params[G_F];
        let mut h = vec![0.0f32; hd];
        for &(row, w) in &enc.rows {
            for k in 0..hd {
                h[k] += w * f[row * hd + k];
            }
        }
        h
    }

    fn step(&self, h: &[f32], prev1: usize, prev2: usize, t: usize) -> StepCache {
        let hd = self.config.hidden;
        let pt = t.min(self.config.max_positions - 1);
        let p = &self.params;
        let u: Vec<f32> = (0..hd)
            .map(|k| (h[k] + p[G_P1][prev1 * hd + k] + p[G_P2][prev2 * hd + k] + p[G_POS][pt * hd + k]).tanh())
            .collect();
        let z: Vec<f32> = (0..hd)
            .map(|i| {
                let row = &p[G_U][i * hd..(i + 1) * hd];
                (row.iter().zip(&u).map(|(a, b)| a * b).sum::<f32>() + p[G_C][i]).tanh()
            })
            .collect();
        let logits: Vec<f32> = (0..self.vocab.len())
            .map(|v| {
                let row = &p[G_W][v * hd..(v + 1) * hd];
                row.iter().zip(&z).map(|(a, b)| a * b).sum::<f32>() + p[G_B][v]
            })
            .collect();
        let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f32>().ln();
        StepCache { u, z, logp: logits.iter().map(|l| l - lse).collect() }
    }

    /// Adds the gradient of `-log p(ys)` (scaled by `weight`) to `grads`;
    /// returns the unscaled loss sum.
    fn accumulate(&self, enc: &Encoded, ys: &[usize], weight: f32, grads: &mut [Vec<f32>]) -> f64 {
        let hd = self.config.hidden;
        let v = self.vocab.len();
        let h = self.hidden_state(enc);
        let mut dh = vec![0.0f32; hd];
        let mut loss = 0.0;
        for t in 0..ys.len() {
            let (prev1, prev2) = prev_tokens(ys, t);
            let pt = t.min(self.config.max_positions - 1);
            let c = self.step(&h, prev1, prev2, t);
            loss -= f64::from(c.logp[ys[t]]);

            let mut dz = vec![0.0f32; hd];
            for tok in 0..v {
                let mut dl = c.logp[tok].exp();
                if tok == ys[t] {
                    dl -= 1.0;
                }
                dl *= weight;
                if dl == 0.0 {
                    continue;
                }
                let w_row = &self.params[G_W][tok * hd..(tok + 1) * hd];
                let gw_row = &mut grads[G_W][tok * hd..(tok + 1) * hd];
                for k in 0..hd {
                    gw_row[k] += dl * c.z[k];
                    dz[k] += dl * w_row[k];
                }
                grads[G_B][tok] += dl;
            }
            let ds: Vec<f32> = (0..hd).map(|i| dz[i] * (1.0 - c.z[i] * c.z[i])).collect();
            let mut du = vec![0.0f32; hd];
            for i in 0..hd {
                grads[G_C][i] += ds[i];
                let u_row = &self.params[G_U][i * hd..(i + 1) * hd];
                let gu_row = &mut grads[G_U][i * hd..(i + 1) * hd];
                for j in 0..hd {
                    gu_row[j] += ds[i] * c.u[j];
                    du[j] += ds[i] * u_row[j];
                }
            }
            for k in 0..hd {
                let da = du[k] * (1.0 - c.u[k] * c.u[k]);
                grads[G_P1][prev1 * hd + k] += da;
                grads[G_P2][prev2 * hd + k] += da;
                grads[G_POS][pt * hd + k] += da;
                dh[k] += da;
            }
        }
        for &(row, w) in &enc.rows {
            for k in 0..hd {
                grads[G_F][row * hd + k] += w * dh[k];
            }
        }
        loss
    }

    fn decode_text(&self, ids: &[usize]) -> String {
        let toks: Vec<&str> = ids.iter().map(|&i| self.vocab[i].as_str()).collect();
        detokenize(&toks)
    }
}

fn prev_tokens(ys: &[usize], t: usize) -> (usize, usize) {
    let p1 = if t >= 1 { ys[t - 1] } else { BOS };
    let p2 = if t >= 2 { ys[t - 2] } else { PAD };
    (p1, p2)
}

#[derive(Clone)]
struct Hyp {
    ids: Vec<usize>,
    score: f64,
}

fn by_score(a: &Hyp, b: &Hyp) -> std::cmp::Ordering {
    b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.ids.cmp(&b.ids))
}

impl Seq2SeqBackend for TinySeq2Seq {
    fn name(&self) -> &str {
        "tiny-seq2seq"
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
        let enc = self.encode(&prompt_features(input)?);
        let h = self.hidden_state(&enc);
        let k = config.beam_size;
        let mut live = vec![Hyp { ids: Vec::new(), score: 0.0 }];
        let mut finished: Vec<Hyp> = Vec::new();
        for t in 0..config.max_tokens {
            let mut candidates: Vec<(Hyp, bool)> = Vec::new();
            for hyp in &live {
                let (p1, p2) = prev_tokens(&hyp.ids, t);
                let c = self.step(&h, p1, p2, t);
                let mut order: Vec<usize> = (0..self.vocab.len())
                    .filter(|&tok| tok != PAD && tok != BOS && tok != UNK && !(t == 0 && tok == EOS))
                    .collect();
                order.sort_by(|&a, &b| c.logp[b].partial_cmp(&c.logp[a]).unwrap_or(std::cmp::Ordering::Equal));
                for &tok in order.iter().take(k) {
                    let score = hyp.score + f64::from(c.logp[tok]);
                    if tok == EOS {
                        candidates.push((Hyp { ids: hyp.ids.clone(), score }, true));
                    } else {
                        let mut ids = hyp.ids.clone();
                        ids.push(tok);
                        candidates.push((Hyp { ids, score }, false));
                    }
                }
            }
            candidates.sort_by(|a, b| by_score(&a.0, &b.0).then(a.1.cmp(&b.1)));
            live.clear();
            for (hyp, done) in candidates.into_iter().take(k) {
                if done {
                    finished.push(hyp);
                } else {
                    live.push(hyp);
                }
            }
            if finished.len() >= k || live.is_empty() {
                break;
            }
        }
        if finished.len() < k {
            finished.extend(live);
        }
        finished.sort_by(by_score);
        finished.dedup_by(|a, b| a.ids == b.ids);
        finished.truncate(k);
        Ok(finished.into_iter().map(|hyp| Beam::new(self.decode_text(&hyp.ids), hyp.score)).collect())
    }

    fn begin_training(&mut self, config: &TrainConfig) -> Result<(), BackendError> {
        let zeros: Vec<Vec<f32>> = self.params.iter().map(|p| vec![0.0; p.len()]).collect();
        self.optim = Some(Optim {
            adam: AdamW::new(config.weight_decay),
            m: zeros.clone(),
            v: zeros,
            grad_clip: config.grad_clip,
        });
        Ok(())
    }

    fn train_step(&mut self, batch: &[TrainingExample], lr: f64) -> Result<f64, BackendError> {
        if self.optim.is_none() {
            self.begin_training(&TrainConfig::default())?;
        }
        let mut encoded = Vec::with_capacity(batch.len());
        for ex in batch {
            let feats = prompt_features(&ex.input)?;
            encoded.push((self.encode_growing(&feats), self.target_ids(&ex.target)));
        }
        let n_tokens: usize = encoded.iter().map(|(_, ys)| ys.len()).sum();
        if n_tokens == 0 {
            return Ok(0.0);
        }
        let weight = 1.0 / n_tokens as f32;
        let mut grads: Vec<Vec<f32>> = self.params.iter().map(|p| vec![0.0; p.len()]).collect();
        let mut loss = 0.0;
        for (enc, ys) in &encoded {
            loss += self.accumulate(enc, ys, weight, &mut grads);
        }
        let loss = loss / n_tokens as f64;

        let opt = self.optim.as_mut().expect("optimizer initialised");
        if let Some(clip) = opt.grad_clip {
            let norm = grads.iter().flatten().map(|g| f64::from(*g).powi(2)).sum::<f64>().sqrt();
            if norm > clip {
                let s = (clip / norm) as f32;
                grads.iter_mut().flatten().for_each(|g| *g *= s);
            }
        }
        opt.adam.next_step();
        for g in 0..GROUPS {
            opt.adam.update(&mut self.params[g], &grads[g], &mut opt.m[g], &mut opt.v[g], lr);
        }
        Ok(loss)
    }

    fn count_tokens(&self, text: &str) -> usize {
        output_tokens(text).len()
    }

    fn save(&self, dir: &Path) -> Result<(), BackendError> {
        let saved = Saved {
            config: self.config,
            vocab: self.vocab.clone(),
            features: self.features.clone(),
            specials: self.specials.clone(),
            params: self.params.clone(),
        };
        fs::create_dir_all(dir).map_err(|e| BackendError::new(e.to_string()))?;
        let json = serde_json::to_string(&saved).map_err(|e| BackendError::new(e.to_string()))?;
        fs::write(dir.join("tiny_seq2seq.json"), json).map_err(|e| BackendError::new(e.to_string()))
    }

    fn reentrant(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(input: &str, target: &str) -> TrainingExample {
        TrainingExample { input: input.into(), target: target.into() }
    }

    fn toy() -> Vec<TrainingExample> {
        vec![
            ex("John <TGT> insulted <TGT> Mary xReason [GEN]", "John was angry"),
            ex("John <TGT> insulted <TGT> Mary Causes [GEN]", "Mary feels hurt"),
            ex("Anna <TGT> helped <TGT> Tom Causes [GEN]", "Tom feels grateful"),
            ex("Anna <TGT> helped <TGT> Tom xReason [GEN]", "Anna is kind"),
        ]
    }

    #[test]
    fn output_tokenizer_round_trip() {
        let toks = output_tokens("Mary didn't reply, then left.");
        assert_eq!(toks, ["Mary", "didn't", "reply", ",", "then", "left", "."]);
        let refs: Vec<&str> = toks.iter().map(String::as_str).collect();
        assert_eq!(detokenize(&refs), "Mary didn't reply, then left.");
    }

    #[test]
    fn analytic_gradient_matches_finite_difference() {
        let data = toy();
        let mut m = TinySeq2Seq::new(
            TinyConfig { hidden: 6, max_positions: 8, ..Default::default() },
            data.iter().map(|e| e.target.as_str()),
        );
        // seed the feature table with non-zero rows
        m.begin_training(&TrainConfig::default()).unwrap();
        m.train_step(&data, 0.05).unwrap();
        let enc: Vec<_> = data.iter().map(|e| (m.encode(&prompt_features(&e.input).unwrap()), m.target_ids(&e.target))).collect();
        let n: usize = enc.iter().map(|(_, ys)| ys.len()).sum();
        let mut grads: Vec<Vec<f32>> = m.params.iter().map(|p| vec![0.0; p.len()]).collect();
        for (e, ys) in &enc {
            m.accumulate(e, ys, 1.0 / n as f32, &mut grads);
        }
        for g in 0..GROUPS {
            for idx in [0, m.params[g].len() / 2, m.params[g].len() - 1] {
                let orig = m.params[g][idx];
                let eps = 1e-2f32;
                m.params[g][idx] = orig + eps;
                let up = m.loss(&data).unwrap();
                m.params[g][idx] = orig - eps;
                let down = m.loss(&data).unwrap();
                m.params[g][idx] = orig;
                let numeric = (up - down) / (2.0 * f64::from(eps));
                let analytic = f64::from(grads[g][idx]);
                assert!((numeric - analytic).abs() < 2e-3 + 0.05 * analytic.abs(), "group {g} idx {idx}: {numeric} vs {analytic}");
            }
        }
    }

    #[test]
    fn learns_a_tiny_mapping() {
        let data = toy();
        let mut m = TinySeq2Seq::new(TinyConfig::default(), data.iter().map(|e| e.target.as_str()));
        m.begin_training(&TrainConfig { weight_decay: 0.0, ..Default::default() }).unwrap();
        let first = m.train_step(&data, 0.02).unwrap();
        for _ in 0..150 {
            m.train_step(&data, 0.02).unwrap();
        }
        assert!(m.loss(&data).unwrap() < first / 10.0);
        let beams = m.generate(&data[2].input, &GenerationConfig::default()).unwrap();
        assert_eq!(beams[0].text, "Tom feels grateful");
        assert!(beams.len() <= 5);
        assert!(beams.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let data = toy();
        let mut m = TinySeq2Seq::new(TinyConfig::default(), data.iter().map(|e| e.target.as_str()));
        m.begin_training(&TrainConfig::default()).unwrap();
        m.train_step(&data[..2], 0.02).unwrap();
        let before_loss = m.loss(&data).unwrap();
        let before_gen = m.generate(&data[0].input, &GenerationConfig::default()).unwrap();
        m.train_step(&data, 0.0).unwrap();
        assert_eq!(m.loss(&data).unwrap(), before_loss);
        assert_eq!(m.generate(&data[0].input, &GenerationConfig::default()).unwrap(), before_gen);
    }

    #[test]
    fn save_load_round_trip() {
        let data = toy();
        let mut m = TinySeq2Seq::new(TinyConfig::default(), data.iter().map(|e| e.target.as_str()));
        m.register_special_tokens(&["<TGT>", "[GEN]"]);
        m.train_step(&data, 0.01).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let back = TinySeq2Seq::load(dir.path()).unwrap();
        assert_eq!(back.special_tokens(), m.special_tokens());
        let g = GenerationConfig::default();
        assert_eq!(back.generate(&data[1].input, &g).unwrap(), m.generate(&data[1].input, &g).unwrap());
    }

    #[test]
    fn unknown_prompt_words_are_ignored() {
        let data = toy();
        let m = TinySeq2Seq::new(TinyConfig::default(), data.iter().map(|e| e.target.as_str()));
        let beams = m.generate("Zork <TGT> frobbed <TGT> Quux HinderedBy [GEN]", &GenerationConfig::default()).unwrap();
        assert!(!beams.is_empty());
        assert!(beams.iter().all(|b| !b.text.is_empty() && !b.text.contains("<unk>")));
    }
}
