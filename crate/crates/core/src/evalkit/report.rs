use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};

use super::metrics::{aggregate_max_over_refs, bleu_n, embed_score, rouge_l, TOKENIZER_VERSION, ROUGE_BETA};
use crate::error::{Error, Result};
use crate::modelkit::{batch_generate, EmbeddingBackend, GenerationConfig, Seq2SeqBackend};
use crate::schema::{ContextSentence, EventMention, InferenceRecord, RelationType};
use crate::seqio::serialize_prompt;

/// All references for one (context, event, relation) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGroup {
    pub context: ContextSentence,
    pub event: EventMention,
    pub relation: RelationType,
    pub references: Vec<String>,
}

impl EvalGroup {
    pub fn prompt(&self) -> Result<String> {
        Ok(serialize_prompt(&self.context, &self.event, self.relation)?)
    }
}

/// Groups records by (context, event span, relation), in that order.
pub fn group_records(
    records: &[InferenceRecord],
    contexts: &BTreeMap<String, ContextSentence>,
) -> Result<Vec<EvalGroup>> {
    let mut groups: BTreeMap<(String, usize, usize, usize), EvalGroup> = BTreeMap::new();
    for r in records {
        let context = contexts
            .get(&r.context_id)
            .ok_or_else(|| Error::data(format!("record refers to unknown context {}", r.context_id)))?;
        let key = (r.context_id.clone(), r.event.span.start, r.event.span.end, r.relation.index());
        groups
            .entry(key)
            .or_insert_with(|| EvalGroup {
                context: context.clone(),
                event: r.event.clone(),
                relation: r.relation,
                references: Vec::new(),
            })
            .references
            .push(r.inference.clone());
    }
    Ok(groups.into_values().collect())
}

/// Dataset-level scores ×100.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricRow {
    pub rouge_l: f64,
    pub bleu_2: f64,
    pub bleu_4: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embed_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScores {
    pub model: String,
    pub overall: MetricRow,
    pub per_relation: BTreeMap<RelationType, MetricRow>,
    pub groups_scored: usize,
    /// Groups whose generation failed; excluded from the means.
    pub groups_skipped: usize,
    /// Scored groups that produced no generations and count as 0.
    pub groups_empty: usize,
}

/// Metric settings recorded alongside the scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSettings {
    pub tokenizer: String,
    pub rouge_beta: f64,
    pub bleu_smoothing: String,
    pub aggregation: String,
}

impl Default for MetricSettings {
    fn default() -> Self {
        MetricSettings {
            tokenizer: TOKENIZER_VERSION.to_string(),
            rouge_beta: ROUGE_BETA,
            bleu_smoothing: "add-one on zero counts, orders >= 2".to_string(),
            aggregation: "max over references, mean over generations, mean over groups".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub settings: MetricSettings,
    pub models: Vec<ModelScores>,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    rouge: f64,
    b2: f64,
    b4: f64,
    emb: f64,
    n: usize,
}

impl Sums {
    fn row(&self, with_embed: bool) -> MetricRow {
        let mean = |x: f64| if self.n == 0 { 0.0 } else { 100.0 * x / self.n as f64 };
        MetricRow {
            rouge_l: mean(self.rouge),
            bleu_2: mean(self.b2),
            bleu_4: mean(self.b4),
            embed_score: with_embed.then(|| mean(self.emb)),
        }
    }
}

/// Scores precomputed generations. `generations[i]` belongs to `groups[i]`;
/// `None` marks a failed group.
pub fn score_generations(
    model: &str,
    groups: &[EvalGroup],
    generations: &[Option<Vec<String>>],
    embedder: Option<&dyn EmbeddingBackend>,
) -> Result<ModelScores> {
    if groups.len() != generations.len() {
        return Err(Error::data("one generation list per group expected"));
    }
    let mut overall = Sums::default();
    let mut by_rel: BTreeMap<RelationType, Sums> = BTreeMap::new();
    let (mut skipped, mut empty) = (0, 0);
    for (g, gens) in groups.iter().zip(generations) {
        let Some(gens) = gens else {
            skipped += 1;
            continue;
        };
        let rouge = aggregate_max_over_refs(gens, &g.references, rouge_l)?;
        if rouge.empty_generated {
            empty += 1;
        }
        let b2 = aggregate_max_over_refs(gens, &g.references, |c, r| bleu_n(c, r, 2))?.value;
        let b4 = aggregate_max_over_refs(gens, &g.references, |c, r| bleu_n(c, r, 4))?.value;
        let emb = match embedder {
            Some(e) => embed_score(gens, &g.references, e)?.value,
            None => 0.0,
        };
        for s in [&mut overall, by_rel.entry(g.relation).or_default()] {
            s.rouge += rouge.value;
            s.b2 += b2;
            s.b4 += b4;
            s.emb += emb;
            s.n += 1;
        }
    }
    let with_embed = embedder.is_some();
    Ok(ModelScores {
        model: model.to_string(),
        overall: overall.row(with_embed),
        per_relation: by_rel.into_iter().map(|(r, s)| (r, s.row(with_embed))).collect(),
        groups_scored: overall.n,
        groups_skipped: skipped,
        groups_empty: empty,
    })
}

/// Generates for every group with `backend` and scores the result.
pub fn evaluate_model(
    backend: &dyn Seq2SeqBackend,
    groups: &[EvalGroup],
    config: &GenerationConfig,
    embedder: Option<&dyn EmbeddingBackend>,
) -> Result<ModelScores> {
    config.validate()?;
    let prompts: Vec<String> = groups.iter().map(EvalGroup::prompt).collect::<Result<_>>()?;
    let outputs = batch_generate(backend, &prompts, config, &|_, _| {});
    let generations: Vec<Option<Vec<String>>> = prompts
        .iter()
        .map(|p| match &outputs[p] {
            Ok(beams) => Some(beams.iter().map(|b| b.text.clone()).collect()),
            Err(e) => {
                warn!("{}: generation failed for {p:?}: {e}", backend.name());
                None
            }
        })
        .collect();
    score_generations(backend.name(), groups, &generations, embedder)
}

/// Scores each group's references against themselves; overlap metrics must
/// come out at exactly 100.
pub fn evaluate_references(groups: &[EvalGroup], embedder: Option<&dyn EmbeddingBackend>) -> Result<ModelScores> {
    let gens: Vec<Option<Vec<String>>> = groups.iter().map(|g| Some(g.references.clone())).collect();
    score_generations("references", groups, &gens, embedder)
}

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

impl MetricRow {
    fn rounded(&self) -> MetricRow {
        MetricRow {
            rouge_l: round3(self.rouge_l),
            bleu_2: round3(self.bleu_2),
            bleu_4: round3(self.bleu_4),
            embed_score: self.embed_score.map(round3),
        }
    }

    fn cells(&self) -> String {
        let emb = self.embed_score.map(fmt3).unwrap_or_else(|| "-".into());
        format!("{} | {} | {} | {}", fmt3(self.rouge_l), fmt3(self.bleu_2), fmt3(self.bleu_4), emb)
    }
}

impl EvalReport {
    pub fn new(models: Vec<ModelScores>) -> Self {
        EvalReport { settings: MetricSettings::default(), models }
    }

    /// JSON with every score rounded to 3 decimals.
    pub fn to_json(&self) -> serde_json::Value {
        let mut r = self.clone();
        for m in &mut r.models {
            m.overall = m.overall.rounded();
            m.per_relation.values_mut().for_each(|row| *row = row.rounded());
        }
        serde_json::to_value(r).expect("report serializes")
    }

    pub fn to_markdown(&self, per_relation: bool) -> String {
        let mut out = String::new();
        out.push_str("| Model | ROUGE-L | BLEU-2 | BLEU-4 | Embed |\n|---|---:|---:|---:|---:|\n");
        for m in &self.models {
            let _ = writeln!(out, "| {} | {} |", m.model, m.overall.cells());
        }
        if per_relation {
            for m in &self.models {
                let _ = writeln!(out, "\n**{}** by relation\n", m.model);
                out.push_str("| Relation | ROUGE-L | BLEU-2 | BLEU-4 | Embed |\n|---|---:|---:|---:|---:|\n");
                for (rel, row) in &m.per_relation {
                    let _ = writeln!(out, "| {} | {} |", rel.name(), row.cells());
                }
            }
        }
        let skipped: Vec<String> = self
            .models
            .iter()
            .filter(|m| m.groups_skipped > 0)
            .map(|m| format!("{}: {} group(s) skipped", m.model, m.groups_skipped))
            .collect();
        if !skipped.is_empty() {
            let _ = writeln!(out, "\n{}", skipped.join("; "));
        }
        out
    }
}
