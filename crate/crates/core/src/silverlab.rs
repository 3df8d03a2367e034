//! Silver-standard training data for multi-event inference.
//!
//! Every strategy starts from the same place: each target event is aligned to
//! an SVO triple, the triple is rendered as a simple sentence `S_j`, and a
//! pretrained single-event model generates inferences `I^j` for it.
//!
//! - **split** keeps all of `I^j`.
//! - **overlap** also generates inferences `I` for the whole (unmarked)
//!   context and keeps members of `I^j` whose cosine similarity to some
//!   member of `I` is strictly above the threshold.
//! - **nli** keeps members of `I^j` entailed by the context, or, for
//!   `HinderedBy`, those that contradict it.

use std::collections::HashMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modelkit::{
    cosine, generate, EmbeddingBackend, GenerationConfig, NliBackend, NliLabel, Seq2SeqBackend,
};
use crate::schema::{validate_record, ContextSentence, EventMention, InferenceRecord, Polarity, Provenance, RelationType};
use crate::seqio::serialize_plain_prompt;
use crate::splitter::{align_predicate, extract_svo, render_simple_sentence, OieBackend};
use crate::text::normalize_inference;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    OverlapAboveThreshold,
    Entailed,
    ContradictsForHindered,
    BelowThreshold,
    Neutral,
    WrongLabel,
}

impl FilterReason {
    pub fn is_keep(self) -> bool {
        matches!(self, FilterReason::OverlapAboveThreshold | FilterReason::Entailed | FilterReason::ContradictsForHindered)
    }
}

/// The verdict on one candidate inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub inference: String,
    /// Cosine similarity (overlap) or probability of the label the relation
    /// asks for (nli).
    pub score: f64,
    pub kept: bool,
    pub reason: FilterReason,
}

impl FilterDecision {
    fn new(inference: &str, score: f64, reason: FilterReason) -> Self {
        FilterDecision { inference: inference.to_string(), score, kept: reason.is_keep(), reason }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Split,
    Overlap,
    Nli,
}

impl Strategy {
    pub fn provenance(self) -> Provenance {
        match self {
            Strategy::Split => Provenance::SilverSplit,
            Strategy::Overlap => Provenance::SilverOverlap,
            Strategy::Nli => Provenance::SilverNli,
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(Strategy::Split),
            "overlap" => Ok(Strategy::Overlap),
            "nli" => Ok(Strategy::Nli),
            other => Err(Error::config(format!("unknown silver strategy {other:?} (split|overlap|nli)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SilverConfig {
    pub strategy: Strategy,
    pub overlap_threshold: f64,
    /// Size of both `I` and `I^j`.
    pub inferences_per_relation: usize,
    /// Keep the best candidate when filtering leaves an (event, relation)
    /// pair empty.
    pub fallback_keep_top1: bool,
    pub generation: GenerationConfig,
}

impl Default for SilverConfig {
    fn default() -> Self {
        SilverConfig {
            strategy: Strategy::Split,
            overlap_threshold: 0.7,
            inferences_per_relation: 5,
            fallback_keep_top1: false,
            generation: GenerationConfig::default(),
        }
    }
}

impl SilverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.overlap_threshold) {
            return Err(Error::config(format!("overlap_threshold {} not in [0, 1]", self.overlap_threshold)));
        }
        if self.inferences_per_relation < 1 {
            return Err(Error::config("inferences_per_relation must be at least 1"));
        }
        self.generation.validate()
    }
}

/// Up to `n` distinct inferences for a simple head, in generation order.
/// Duplicates are detected after [`normalize_inference`].
pub fn generate_inferences(
    backend: &dyn Seq2SeqBackend,
    head: &str,
    relation: RelationType,
    n: usize,
) -> Result<Vec<String>> {
    generate_inferences_with(backend, head, relation, n, &GenerationConfig::default())
}

/// [`generate_inferences`] with explicit beam settings. The beam is widened
/// to `n` when narrower.
pub fn generate_inferences_with(
    backend: &dyn Seq2SeqBackend,
    head: &str,
    relation: RelationType,
    n: usize,
    config: &GenerationConfig,
) -> Result<Vec<String>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let prompt = serialize_plain_prompt(head, relation)?;
    let beam = config.beam_size.max(n);
    let config = GenerationConfig { beam_size: beam, num_return: beam, ..*config };
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for b in generate(backend, &prompt, &config)? {
        let key = normalize_inference(&b.text);
        if key.is_empty() || !seen.insert(key) {
            continue;
        }
        out.push(b.text);
        if out.len() == n {
            break;
        }
    }
    Ok(out)
}

/// Scores each candidate by its best cosine similarity to `references` and
/// keeps it when the score is strictly above `threshold`.
pub fn overlap_filter(
    candidates: &[String],
    references: &[String],
    embedder: &dyn EmbeddingBackend,
    threshold: f64,
) -> Result<Vec<FilterDecision>> {
    let refs: Vec<Vec<f32>> = references.iter().map(|r| embedder.embed(r)).collect::<Result<_, _>>()?;
    candidates
        .iter()
        .map(|c| {
            let score = if refs.is_empty() {
                0.0
            } else {
                let v = embedder.embed(c)?;
                refs.iter().map(|r| cosine(&v, r)).fold(f64::NEG_INFINITY, f64::max)
            };
            let reason = if score > threshold { FilterReason::OverlapAboveThreshold } else { FilterReason::BelowThreshold };
            Ok(FilterDecision::new(c, score, reason))
        })
        .collect()
}

/// Classifies each candidate against the context. A failed classification
/// rejects that candidate only.
pub fn nli_filter(
    context: &str,
    candidates: &[String],
    relation: RelationType,
    nli: &dyn NliBackend,
) -> Vec<FilterDecision> {
    let (wanted, keep_reason) = match relation.polarity() {
        Polarity::Contradiction => (NliLabel::Contradiction, FilterReason::ContradictsForHindered),
        Polarity::Entailment => (NliLabel::Entailment, FilterReason::Entailed),
    };
    candidates
        .iter()
        .map(|c| match nli.classify(context, c) {
            Ok(dist) => {
                let reason = match dist.argmax() {
                    l if l == wanted => keep_reason,
                    NliLabel::Neutral => FilterReason::Neutral,
                    _ => FilterReason::WrongLabel,
                };
                FilterDecision::new(c, dist.prob(wanted), reason)
            }
            Err(e) => {
                warn!("NLI failed on {c:?}: {e}");
                FilterDecision::new(c, 0.0, FilterReason::WrongLabel)
            }
        })
        .collect()
}

/// Backends available to [`build_silver_dataset`].
#[derive(Clone, Copy, Default)]
pub struct SilverBackends<'a> {
    pub seq2seq: Option<&'a dyn Seq2SeqBackend>,
    pub oie: Option<&'a dyn OieBackend>,
    pub embedder: Option<&'a dyn EmbeddingBackend>,
    pub nli: Option<&'a dyn NliBackend>,
}

/// One line of the filter audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub context_id: String,
    pub event: EventMention,
    pub relation: RelationType,
    #[serde(flatten)]
    pub decision: FilterDecision,
    /// Set on the candidate kept by the top-1 fallback.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SilverOutput {
    pub records: Vec<InferenceRecord>,
    pub audit: Vec<AuditEntry>,
    /// Events with no aligned SVO triple.
    pub unaligned_events: Vec<EventMention>,
}

fn require<'a, T: ?Sized>(b: Option<&'a T>, what: &str, strategy: Strategy) -> Result<&'a T> {
    b.ok_or_else(|| Error::config(format!("strategy {strategy:?} needs a {what} backend")))
}

struct ContextResult {
    records: Vec<InferenceRecord>,
    audit: Vec<AuditEntry>,
    unaligned: Vec<EventMention>,
}

/// Builds silver records for every (event, relation) pair of every context.
///
/// Output is ordered by (context id, event span, relation) regardless of
/// how the work was scheduled. Records that would fail [`validate_record`]
/// are dropped with a warning.
pub fn build_silver_dataset(
    contexts: &[(ContextSentence, Vec<EventMention>)],
    config: &SilverConfig,
    backends: SilverBackends<'_>,
) -> Result<SilverOutput> {
    config.validate()?;
    let strategy = config.strategy;
    let seq2seq = require(backends.seq2seq, "seq2seq", strategy)?;
    let oie = require(backends.oie, "OIE", strategy)?;
    let embedder = match strategy {
        Strategy::Overlap => Some(require(backends.embedder, "embedding", strategy)?),
        _ => None,
    };
    let nli = match strategy {
        Strategy::Nli => Some(require(backends.nli, "NLI", strategy)?),
        _ => None,
    };

    let run = |(ctx, events): &(ContextSentence, Vec<EventMention>)| -> Result<ContextResult> {
        process_context(ctx, events, config, seq2seq, oie, embedder, nli)
    };
    let results: Vec<Result<ContextResult>> =
        if seq2seq.reentrant() { contexts.par_iter().map(run).collect() } else { contexts.iter().map(run).collect() };

    let mut out = SilverOutput::default();
    for r in results {
        let r = r?;
        out.records.extend(r.records);
        out.audit.extend(r.audit);
        out.unaligned_events.extend(r.unaligned);
    }
    let key = |id: &str, e: &EventMention, rel: RelationType| (id.to_string(), e.span.start, e.span.end, rel.index());
    out.records.sort_by_cached_key(|r| key(&r.context_id, &r.event, r.relation));
    out.audit.sort_by_cached_key(|a| key(&a.context_id, &a.event, a.relation));
    Ok(out)
}

fn process_context(
    ctx: &ContextSentence,
    events: &[EventMention],
    config: &SilverConfig,
    seq2seq: &dyn Seq2SeqBackend,
    oie: &dyn OieBackend,
    embedder: Option<&dyn EmbeddingBackend>,
    nli: Option<&dyn NliBackend>,
) -> Result<ContextResult> {
    let n = config.inferences_per_relation;
    let gen = |head: &str, rel| generate_inferences_with(seq2seq, head, rel, n, &config.generation);
    let triples = extract_svo(ctx, oie)?;
    let mut full: HashMap<RelationType, Vec<String>> = HashMap::new();
    let mut res = ContextResult { records: Vec::new(), audit: Vec::new(), unaligned: Vec::new() };

    for event in events {
        let Some(triple) = align_predicate(&triples, event) else {
            warn!("context {}: no SVO triple for event {:?}", ctx.id, event.surface);
            res.unaligned.push(event.clone());
            continue;
        };
        let head = render_simple_sentence(&triple);
        for relation in RelationType::ALL {
            let candidates = gen(&head, relation)?;
            let mut decisions: Vec<FilterDecision> = match config.strategy {
                Strategy::Split => {
                    for c in &candidates {
                        push_record(&mut res.records, ctx, event, relation, c, config.strategy);
                    }
                    continue;
                }
                Strategy::Overlap => {
                    if !full.contains_key(&relation) {
                        full.insert(relation, gen(&ctx.text, relation)?);
                    }
                    overlap_filter(&candidates, &full[&relation], embedder.expect("checked"), config.overlap_threshold)?
                }
                Strategy::Nli => nli_filter(&ctx.text, &candidates, relation, nli.expect("checked")),
            };
            let mut fallback_idx = None;
            if config.fallback_keep_top1 && !decisions.iter().any(|d| d.kept) {
                fallback_idx = decisions
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.score.partial_cmp(&b.1.score).unwrap_or(std::cmp::Ordering::Equal).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i);
            }
            for (i, d) in decisions.drain(..).enumerate() {
                let is_fallback = fallback_idx == Some(i);
                if d.kept || is_fallback {
                    push_record(&mut res.records, ctx, event, relation, &d.inference, config.strategy);
                }
                res.audit.push(AuditEntry {
                    context_id: ctx.id.clone(),
                    event: event.clone(),
                    relation,
                    decision: d,
                    fallback: is_fallback,
                });
            }
        }
    }
    Ok(res)
}

fn push_record(
    out: &mut Vec<InferenceRecord>,
    ctx: &ContextSentence,
    event: &EventMention,
    relation: RelationType,
    inference: &str,
    strategy: Strategy,
) {
    let record = InferenceRecord {
        context_id: ctx.id.clone(),
        event: event.clone(),
        relation,
        inference: inference.to_string(),
        provenance: strategy.provenance(),
    };
    let violations = validate_record(&record, ctx);
    if violations.is_empty() {
        out.push(record);
    } else {
        warn!("context {}: dropping {inference:?}: {}", ctx.id, violations[0]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelkit::{FixtureSeq2Seq, NliDistribution, TableEmbedder, TableNli};

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn generate_dedups_and_truncates() {
        let b = FixtureSeq2Seq::new().with("John insulted Mary xReason [GEN]", &["a", "A.", "b", "c", "d"]);
        assert_eq!(generate_inferences(&b, "John insulted Mary", RelationType::XReason, 5).unwrap(), s(&["a", "b", "c", "d"]));
        assert_eq!(generate_inferences(&b, "John insulted Mary", RelationType::XReason, 2).unwrap(), s(&["a", "b"]));
        assert!(generate_inferences(&b, "John insulted Mary", RelationType::XReason, 0).unwrap().is_empty());
        assert!(generate_inferences(&b, "nope", RelationType::XReason, 3).is_err());
    }

    #[test]
    fn overlap_boundaries() {
        let e = TableEmbedder::new(2).with("x", vec![1.0, 0.0]).with("y", vec![0.0, 1.0]);
        let d = overlap_filter(&s(&["x"]), &s(&["x"]), &e, 0.7).unwrap();
        assert!(d[0].kept && (d[0].score - 1.0).abs() < 1e-12);
        assert!(!overlap_filter(&s(&["x"]), &s(&["x"]), &e, 1.0).unwrap()[0].kept);
        let d = overlap_filter(&s(&["x"]), &s(&["y"]), &e, 0.0).unwrap();
        assert_eq!((d[0].score, d[0].kept), (0.0, false));
        let d = overlap_filter(&s(&["x", "y"]), &[], &e, 0.0).unwrap();
        assert!(d.iter().all(|d| d.score == 0.0 && !d.kept));
    }

    #[test]
    fn nli_rules() {
        let ctx = "Mary didn't reply";
        let nli = TableNli::new()
            .with_label(ctx, "Mary did not want to respond", NliLabel::Entailment)
            .with_label(ctx, "Mary replied", NliLabel::Contradiction)
            .with(ctx, "maybe", NliDistribution::new(0.2, 0.5, 0.3).unwrap());
        let d = nli_filter(ctx, &s(&["Mary did not want to respond"]), RelationType::XReason, &nli);
        assert!(d[0].kept && d[0].reason == FilterReason::Entailed);
        let d = nli_filter(ctx, &s(&["Mary replied"]), RelationType::HinderedBy, &nli);
        assert!(d[0].kept && d[0].reason == FilterReason::ContradictsForHindered);
        let d = nli_filter(ctx, &s(&["Mary replied"]), RelationType::Causes, &nli);
        assert_eq!(d[0].reason, FilterReason::WrongLabel);
        let d = nli_filter(ctx, &s(&["maybe"]), RelationType::Causes, &nli);
        assert_eq!((d[0].reason, d[0].kept), (FilterReason::Neutral, false));
        assert!((d[0].score - 0.2).abs() < 1e-12);
        let d = nli_filter(ctx, &s(&["unknown"]), RelationType::Causes, &nli);
        assert_eq!((d[0].reason, d[0].kept), (FilterReason::WrongLabel, false));
    }

    #[test]
    fn missing_backend_is_a_config_error() {
        let cfg = SilverConfig { strategy: Strategy::Nli, ..Default::default() };
        let b = FixtureSeq2Seq::new();
        let err = build_silver_dataset(&[], &cfg, SilverBackends { seq2seq: Some(&b), ..Default::default() }).unwrap_err();
        assert!(err.is_config());
    }
}
