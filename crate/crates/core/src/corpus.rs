//! Corpus ingestion: complex-sentence selection, verb-event extraction, and
//! disjoint train/dev/test splitting with per-split statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{
    CharSpan, ContextSentence, DatasetSplit, EventMention, InferenceRecord, RelationType, Source, SplitName,
};
use crate::tagging::{PosTagger, TaggedToken, Upos};

/// Particles merged into a verb run even when tagged as particle or adverb.
pub const DEFAULT_MERGE_PARTICLES: [&str; 2] = ["not", "n't"];

/// One source document: a topic label and its sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default)]
    pub source: Source,
    pub topic: String,
    pub sentences: Vec<String>,
    /// Pre-annotated event spans, parallel to `sentences`. When present,
    /// extraction is bypassed for this document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_spans: Option<Vec<Vec<CharSpan>>>,
}

/// A selected context together with its event mentions; the ingest output line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextEvents {
    #[serde(flatten)]
    pub context: ContextSentence,
    pub events: Vec<EventMention>,
}

/// One mention per maximal run of verbal tokens, using the default merge list.
pub fn extract_event_mentions(context: &ContextSentence, pos_tags: &[TaggedToken]) -> Vec<EventMention> {
    extract_event_mentions_with(context, pos_tags, &DEFAULT_MERGE_PARTICLES)
}

/// Event extraction with an explicit particle merge list.
///
/// A run is a maximal sequence of `VERB`/`AUX` tokens, optionally interleaved
/// with merge-list particles. Runs without a main verb (bare auxiliaries) are
/// dropped, and particles are never left dangling at a run edge.
pub fn extract_event_mentions_with(
    context: &ContextSentence,
    pos_tags: &[TaggedToken],
    merge: &[&str],
) -> Vec<EventMention> {
    let mergeable = |t: &TaggedToken| {
        matches!(t.tag, Upos::Part | Upos::Adv) && merge.iter().any(|m| t.token.eq_ignore_ascii_case(m))
    };
    let mut runs: Vec<Vec<&TaggedToken>> = Vec::new();
    let mut current: Vec<&TaggedToken> = Vec::new();
    for tok in pos_tags {
        if tok.tag.is_verbal() || (!current.is_empty() && mergeable(tok)) {
            current.push(tok);
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }

    let mut mentions = Vec::new();
    for mut run in runs {
        while run.last().is_some_and(|t| !t.tag.is_verbal()) {
            run.pop();
        }
        if !run.iter().any(|t| t.tag == Upos::Verb) {
            continue;
        }
        let span = CharSpan::new(run[0].span.start, run[run.len() - 1].span.end);
        match EventMention::from_span(context, span) {
            Ok(m) => mentions.push(m),
            Err(e) => warn!("context {}: dropping verb run outside the text: {e}", context.id),
        }
    }
    mentions.sort_by_key(|m| m.span.start);
    mentions
}

fn check_selection_args(top_k_topics: usize, min_events: usize) -> Result<()> {
    if top_k_topics < 1 {
        return Err(Error::config("top_k_topics must be at least 1"));
    }
    if min_events < 2 {
        return Err(Error::config("min_events must be at least 2"));
    }
    Ok(())
}

/// Topics ranked by document frequency, ties broken by name.
fn top_topics(docs: &[CorpusDoc], k: usize) -> Vec<String> {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for d in docs {
        *freq.entry(d.topic.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(t, _)| t.to_string()).collect()
}

/// Selects multi-event sentences and returns them with their event mentions.
///
/// Only the `top_k_topics` most frequent topics are eligible. Within a topic,
/// contexts are ordered by descending character length, then by id.
pub fn ingest(
    docs: &[CorpusDoc],
    top_k_topics: usize,
    min_events: usize,
    tagger: &dyn PosTagger,
) -> Result<Vec<ContextEvents>> {
    check_selection_args(top_k_topics, min_events)?;
    let topics = top_topics(docs, top_k_topics);
    let mut by_topic: HashMap<&str, Vec<ContextEvents>> = HashMap::new();
    for (di, doc) in docs.iter().enumerate() {
        if !topics.iter().any(|t| *t == doc.topic) {
            continue;
        }
        let doc_id = doc.id.clone().unwrap_or_else(|| format!("d{di}"));
        for (si, raw) in doc.sentences.iter().enumerate() {
            let text = raw.trim();
            if text.is_empty() {
                continue;
            }
            let context = ContextSentence {
                id: format!("{doc_id}-s{si}"),
                text: text.to_string(),
                source: doc.source,
                topic: doc.topic.clone(),
            };
            let events = match doc.gold_spans.as_ref() {
                Some(gold) => gold_mentions(&context, gold.get(si).map(Vec::as_slice).unwrap_or(&[])),
                None => match tagger.tag(&context.text) {
                    Ok(tags) => extract_event_mentions(&context, &tags),
                    Err(e) => {
                        warn!("tagger failed on {}: {e}; sentence skipped", context.id);
                        continue;
                    }
                },
            };
            if events.len() >= min_events {
                by_topic.entry(doc.topic.as_str()).or_default().push(ContextEvents { context, events });
            }
        }
    }
    let mut out = Vec::new();
    for topic in &topics {
        if let Some(mut items) = by_topic.remove(topic.as_str()) {
            items.sort_by(|a, b| {
                b.context.char_len().cmp(&a.context.char_len()).then_with(|| a.context.id.cmp(&b.context.id))
            });
            out.extend(items);
        }
    }
    Ok(out)
}

fn gold_mentions(context: &ContextSentence, spans: &[CharSpan]) -> Vec<EventMention> {
    let mut out: Vec<EventMention> = spans
        .iter()
        .filter_map(|s| match EventMention::from_span(context, *s) {
            Ok(m) => Some(m),
            Err(e) => {
                warn!("context {}: invalid gold span: {e}", context.id);
                None
            }
        })
        .collect();
    out.sort_by_key(|m| m.span.start);
    out
}

/// Contexts with at least `min_events` verb events from the most frequent topics.
pub fn select_complex_sentences(
    docs: &[CorpusDoc],
    top_k_topics: usize,
    min_events: usize,
    tagger: &dyn PosTagger,
) -> Result<Vec<ContextSentence>> {
    Ok(ingest(docs, top_k_topics, min_events, tagger)?.into_iter().map(|c| c.context).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingUnit {
    ByEvent,
    #[default]
    ByContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Train, dev and test fractions.
    pub ratios: [f64; 3],
    pub seed: u64,
    #[serde(default)]
    pub unit: GroupingUnit,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratios: [0.6, 0.1, 0.3], seed: 42, unit: GroupingUnit::ByContext }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::config(format!("split ratios must be positive, got {:?}", self.ratios)));
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("split ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum UnitKey {
    Context(String),
    Event(String, CharSpan),
}

fn unit_key(record: &InferenceRecord, unit: GroupingUnit) -> UnitKey {
    match unit {
        GroupingUnit::ByContext => UnitKey::Context(record.context_id.clone()),
        GroupingUnit::ByEvent => UnitKey::Event(record.context_id.clone(), record.event.span),
    }
}

/// Largest-remainder apportionment of `n` units, keeping every split non-empty.
fn allocate(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let raw: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts: [usize; 3] = [0; 3];
    for i in 0..3 {
        counts[i] = (raw[i] + 1e-9).floor() as usize;
    }
    let mut remaining = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - counts[a] as f64;
        let fb = raw[b] - counts[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    for i in 0..3 {
        while counts[i] == 0 {
            let donor = (0..3).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
            counts[donor] -= 1;
            counts[i] += 1;
        }
    }
    counts
}

/// Partitions records into train/dev/test so that every grouping unit lands
/// wholly in one split. Deterministic for a given seed; record order within
/// a split follows input order.
pub fn split_dataset(records: &[InferenceRecord], config: &SplitConfig) -> Result<[DatasetSplit; 3]> {
    config.validate()?;
    let units: BTreeSet<UnitKey> = records.iter().map(|r| unit_key(r, config.unit)).collect();
    if units.len() < 3 {
        return Err(Error::InsufficientUnits { found: units.len() });
    }
    let mut units: Vec<UnitKey> = units.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    units.shuffle(&mut rng);

    let counts = allocate(units.len(), &config.ratios);
    let mut assignment: HashMap<UnitKey, usize> = HashMap::new();
    let mut offset = 0;
    for (split, count) in counts.iter().enumerate() {
        for key in &units[offset..offset + count] {
            assignment.insert(key.clone(), split);
        }
        offset += count;
    }

    let mut out = SplitName::ALL.map(|name| DatasetSplit { name, records: Vec::new() });
    for r in records {
        let split = assignment[&unit_key(r, config.unit)];
        out[split].records.push(r.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitStats {
    pub inferences: usize,
    pub predicates: usize,
    pub contexts: usize,
}

/// Counts of unique inferences (per event and relation), unique target
/// predicates and unique contexts.
pub fn split_stats(records: &[InferenceRecord]) -> SplitStats {
    let inferences: HashSet<(&str, CharSpan, RelationType, &str)> = records
        .iter()
        .map(|r| (r.context_id.as_str(), r.event.span, r.relation, r.inference.as_str()))
        .collect();
    let predicates: HashSet<(&str, CharSpan)> =
        records.iter().map(|r| (r.context_id.as_str(), r.event.span)).collect();
    let contexts: HashSet<&str> = records.iter().map(|r| r.context_id.as_str()).collect();
    SplitStats { inferences: inferences.len(), predicates: predicates.len(), contexts: contexts.len() }
}

/// Per-split counts of inferences, unique target predicates and unique contexts.
pub fn dataset_stats(splits: &[DatasetSplit]) -> BTreeMap<SplitName, SplitStats> {
    splits.iter().map(|s| (s.name, split_stats(&s.records))).collect()
}

/// Stats keyed by split name, in the JSON layout written next to split files.
pub fn stats_json(stats: &BTreeMap<SplitName, SplitStats>) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = stats
        .iter()
        .map(|(k, v)| (k.as_str().to_string(), serde_json::to_value(v).unwrap()))
        .collect();
    serde_json::Value::Object(map)
}
