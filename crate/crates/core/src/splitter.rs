//! Decomposition of complex sentences into subject-predicate-object clauses
//! aligned to target events.
//!
//! Open information extraction is an injected [`OieBackend`]. Two backends
//! ship with the crate: [`HeuristicOie`], a clause-boundary splitter over POS
//! tags, and [`ReplayOie`], which replays recorded extractions from a JSONL
//! fixture so that tests run without an external system.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::extract_event_mentions;
use crate::error::{BackendError, Error, Result};
use crate::schema::{read_jsonl, ContextSentence, EventMention};
use crate::tagging::{lemmatize, tokenize, PosTagger, RuleTagger, TaggedToken, Upos};
use crate::text::collapse_whitespace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvoTriple {
    pub subject: String,
    pub predicate: String,
    #[serde(default)]
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_event: Option<EventMention>,
}

impl SvoTriple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: impl Into<String>) -> Self {
        SvoTriple { subject: subject.into(), predicate: predicate.into(), object: object.into(), source_event: None }
    }
}

/// Open information extraction system. Implementations must not share
/// mutable state between calls.
pub trait OieBackend: Send + Sync {
    fn extract(&self, context: &ContextSentence) -> Result<Vec<SvoTriple>, BackendError>;
}

/// Runs the backend and keeps triples whose predicate is grounded in the context.
pub fn extract_svo(context: &ContextSentence, oie: &dyn OieBackend) -> Result<Vec<SvoTriple>> {
    if context.text.trim().is_empty() {
        return Err(Error::data(format!("context {} is empty", context.id)));
    }
    let triples = oie
        .extract(context)
        .map_err(|source| Error::Extraction { context_id: context.id.clone(), source })?;
    let context_lemmas: HashSet<String> = tokenize(&context.text).iter().map(|t| lemmatize(&t.text)).collect();
    Ok(triples
        .into_iter()
        .filter(|t| {
            let lemmas = lemmas_of(&t.predicate);
            let grounded = !lemmas.is_empty() && lemmas.iter().all(|l| context_lemmas.contains(l));
            if !grounded {
                warn!("context {}: dropping triple with ungrounded predicate {:?}", context.id, t.predicate);
            }
            grounded
        })
        .collect())
}

fn lemmas_of(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| lemmatize(&t.text)).collect()
}

const FUNCTION_LEMMAS: &[&str] = &[
    "be", "do", "have", "not", "will", "would", "can", "could", "shall", "should", "may", "might", "must", "to",
];

/// Lemmas that carry the event's meaning; auxiliaries and negation only
/// count when nothing else is left.
fn content_lemmas(text: &str) -> HashSet<String> {
    let all = lemmas_of(text);
    let content: HashSet<String> = all.iter().filter(|l| !FUNCTION_LEMMAS.contains(&l.as_str())).cloned().collect();
    if content.is_empty() {
        all.into_iter().collect()
    } else {
        content
    }
}

/// Picks the triple whose predicate shares the most lemmas with the event.
/// Ties go to the triple anchored closest to the event span.
pub fn align_predicate(triples: &[SvoTriple], event: &EventMention) -> Option<SvoTriple> {
    let target = content_lemmas(&event.surface);
    let distance = |t: &SvoTriple| {
        t.source_event.as_ref().map_or(usize::MAX, |e| e.span.start.abs_diff(event.span.start))
    };
    let mut best: Option<(usize, usize, &SvoTriple)> = None;
    for t in triples {
        let overlap = content_lemmas(&t.predicate).intersection(&target).count();
        if overlap == 0 {
            continue;
        }
        let d = distance(t);
        let better = match best {
            None => true,
            Some((bo, bd, _)) => overlap > bo || (overlap == bo && d < bd),
        };
        if better {
            best = Some((overlap, d, t));
        }
    }
    best.map(|(_, _, t)| SvoTriple { source_event: Some(event.clone()), ..t.clone() })
}

/// `"subject predicate object"` with single spaces and no empty fields.
pub fn render_simple_sentence(triple: &SvoTriple) -> String {
    [&triple.subject, &triple.predicate, &triple.object]
        .iter()
        .map(|f| collapse_whitespace(f))
        .filter(|f| !f.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

const CLAUSE_BREAKS: &[&str] = &[",", ";", "so", "when", "because", "and", "but", "while", "after", "before", "then"];

/// Dependency-free fallback extractor.
///
/// Splits at clause boundaries, takes each verb run as a predicate, the
/// nearest preceding noun chunk as subject (looking back across clauses when
/// the clause has none) and the rest of the clause as object. A verb right
/// after a coordinating conjunction shares the previous subject. Modifiers are
/// never dropped, and pronouns are kept as-is.
pub struct HeuristicOie {
    tagger: Box<dyn PosTagger>,
}

impl Default for HeuristicOie {
    fn default() -> Self {
        HeuristicOie { tagger: Box::new(RuleTagger) }
    }
}

impl HeuristicOie {
    pub fn with_tagger(tagger: Box<dyn PosTagger>) -> Self {
        HeuristicOie { tagger }
    }
}

fn chunk_tag(tag: Upos) -> bool {
    matches!(tag, Upos::Det | Upos::Adj | Upos::Noun | Upos::Propn | Upos::Pron | Upos::Num)
}

/// Nearest noun chunk ending before token `before`, as a token index range.
fn preceding_chunk(tags: &[TaggedToken], before: usize) -> Option<(usize, usize)> {
    let end = (0..before).rev().find(|&i| tags[i].tag.is_nominal())?;
    let mut start = end;
    while start > 0 && chunk_tag(tags[start - 1].tag) && !is_break(&tags[start - 1]) {
        start -= 1;
    }
    Some((start, end + 1))
}

fn is_break(t: &TaggedToken) -> bool {
    CLAUSE_BREAKS.iter().any(|b| t.token.eq_ignore_ascii_case(b))
}

fn text_of(context: &str, tags: &[TaggedToken], range: (usize, usize)) -> String {
    if range.0 >= range.1 {
        return String::new();
    }
    let span = crate::schema::CharSpan::new(tags[range.0].span.start, tags[range.1 - 1].span.end);
    span.slice(context).map(str::to_string).unwrap_or_default()
}

impl OieBackend for HeuristicOie {
    fn extract(&self, context: &ContextSentence) -> Result<Vec<SvoTriple>, BackendError> {
        let tags = self.tagger.tag(&context.text)?;
        let mentions = extract_event_mentions(context, &tags);
        let token_at = |pos: usize| tags.iter().position(|t| t.span.start >= pos).unwrap_or(tags.len());
        let mut out: Vec<SvoTriple> = Vec::new();
        for (mi, mention) in mentions.iter().enumerate() {
            let first = token_at(mention.span.start);
            let after = token_at(mention.span.end);
            let clause_end = (after..tags.len()).find(|&i| is_break(&tags[i])).unwrap_or(tags.len());
            let next_verb = mentions.get(mi + 1).map_or(tags.len(), |m| token_at(m.span.start));
            let mut obj_end = clause_end.min(next_verb);
            while obj_end > after && matches!(tags[obj_end - 1].tag, Upos::Punct | Upos::Part) {
                obj_end -= 1;
            }
            // "X borrowed the car and returned it": the second verb shares X
            let coordinated = first > 0
                && ["and", "but", "or", "then"].iter().any(|c| tags[first - 1].token.eq_ignore_ascii_case(c));
            let subject = match out.last() {
                Some(prev) if coordinated => prev.subject.clone(),
                _ => preceding_chunk(&tags, first).map(|r| text_of(&context.text, &tags, r)).unwrap_or_default(),
            };
            out.push(SvoTriple {
                subject,
                predicate: mention.surface.clone(),
                object: text_of(&context.text, &tags, (after, obj_end)),
                source_event: Some(mention.clone()),
            });
        }
        Ok(out)
    }
}

/// Recorded extraction, one line per context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OieFixtureLine {
    pub context_id: String,
    pub triples: Vec<[String; 3]>,
}

/// Replays recorded extractions keyed by context id.
#[derive(Debug, Clone, Default)]
pub struct ReplayOie {
    recorded: HashMap<String, Vec<SvoTriple>>,
}

impl ReplayOie {
    pub fn from_lines(lines: Vec<OieFixtureLine>) -> Self {
        let recorded = lines
            .into_iter()
            .map(|l| {
                let triples = l.triples.into_iter().map(|[s, p, o]| SvoTriple::new(s, p, o)).collect();
                (l.context_id, triples)
            })
            .collect();
        ReplayOie { recorded }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(ReplayOie::from_lines(read_jsonl(path)?))
    }

    /// Records what `backend` extracts for each context, in fixture form.
    pub fn record(backend: &dyn OieBackend, contexts: &[ContextSentence]) -> Result<Vec<OieFixtureLine>> {
        contexts
            .iter()
            .map(|c| {
                let triples = extract_svo(c, backend)?;
                Ok(OieFixtureLine {
                    context_id: c.id.clone(),
                    triples: triples.into_iter().map(|t| [t.subject, t.predicate, t.object]).collect(),
                })
            })
            .collect()
    }
}

impl OieBackend for ReplayOie {
    fn extract(&self, context: &ContextSentence) -> Result<Vec<SvoTriple>, BackendError> {
        self.recorded
            .get(&context.id)
            .cloned()
            .ok_or_else(|| BackendError::new(format!("no recorded extraction for {}", context.id)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "John insulted Mary, so she didn't reply when he called her";

    fn spo(t: &SvoTriple) -> (&str, &str, &str) {
        (&t.subject, &t.predicate, &t.object)
    }

    #[test]
    fn held_out_sentence_triples() {
        let ctx = ContextSentence::new("sample", SAMPLE);
        let triples = extract_svo(&ctx, &HeuristicOie::default()).unwrap();
        let got: Vec<_> = triples.iter().map(spo).collect();
        assert_eq!(got, [("John", "insulted", "Mary"), ("she", "didn't reply", ""), ("he", "called", "her")]);
    }

    #[test]
    fn single_clause() {
        let ctx = ContextSentence::new("c", "Mary slept.");
        let triples = extract_svo(&ctx, &HeuristicOie::default()).unwrap();
        assert_eq!(triples.iter().map(spo).collect::<Vec<_>>(), [("Mary", "slept", "")]);
    }

    #[test]
    fn subject_found_across_coordination() {
        let ctx = ContextSentence::new("c", "Bryant Dalton was shot and spent several weeks at a medical facility.");
        let triples = extract_svo(&ctx, &HeuristicOie::default()).unwrap();
        let got: Vec<_> = triples.iter().map(spo).collect();
        assert_eq!(
            got,
            [("Bryant Dalton", "was shot", ""), ("Bryant Dalton", "spent", "several weeks at a medical facility")]
        );
    }

    #[test]
    fn empty_extraction() {
        let ctx = ContextSentence::new("c", "The tall tree.");
        assert!(extract_svo(&ctx, &HeuristicOie::default()).unwrap().is_empty());
    }

    struct Failing;
    impl OieBackend for Failing {
        fn extract(&self, _: &ContextSentence) -> Result<Vec<SvoTriple>, BackendError> {
            Err(BackendError::new("boom"))
        }
    }

    #[test]
    fn backend_failure_carries_context_id() {
        let err = extract_svo(&ContextSentence::new("ctx-9", "Mary slept."), &Failing).unwrap_err();
        assert!(err.to_string().contains("ctx-9"));
    }

    #[test]
    fn ungrounded_predicates_are_dropped() {
        let replay = ReplayOie::from_lines(vec![OieFixtureLine {
            context_id: "c".into(),
            triples: vec![
                ["Mary".into(), "slept".into(), "".into()],
                ["Mary".into(), "danced".into(), "".into()],
            ],
        }]);
        let out = extract_svo(&ContextSentence::new("c", "Mary slept."), &replay).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn alignment() {
        let ctx = ContextSentence::new("sample", SAMPLE);
        let triples = extract_svo(&ctx, &HeuristicOie::default()).unwrap();
        let called = EventMention::find(&ctx, "called").unwrap();
        let t = align_predicate(&triples, &called).unwrap();
        assert_eq!(spo(&t), ("he", "called", "her"));
        assert_eq!(t.source_event.as_ref(), Some(&called));
        let insulted = EventMention::find(&ctx, "insulted").unwrap();
        assert_eq!(spo(&align_predicate(&triples, &insulted).unwrap()), ("John", "insulted", "Mary"));
        let reply = EventMention::find(&ctx, "didn't reply").unwrap();
        assert_eq!(spo(&align_predicate(&triples, &reply).unwrap()), ("she", "didn't reply", ""));
    }

    #[test]
    fn alignment_absent_without_overlap() {
        let ctx = ContextSentence::new("c", "Mary slept and Tom ate.");
        let triples = vec![SvoTriple::new("Mary", "slept", "")];
        assert!(align_predicate(&triples, &EventMention::find(&ctx, "ate").unwrap()).is_none());
    }

    #[test]
    fn alignment_ties_prefer_nearest_anchor() {
        let ctx = ContextSentence::new("c", "Tom called Sue and Sue called Tom");
        let triples = extract_svo(&ctx, &HeuristicOie::default()).unwrap();
        let second = EventMention::from_span(&ctx, crate::schema::CharSpan::new(23, 29)).unwrap();
        assert_eq!(second.surface, "called");
        assert_eq!(spo(&align_predicate(&triples, &second).unwrap()), ("Sue", "called", "Tom"));
    }

    #[test]
    fn rendering() {
        assert_eq!(render_simple_sentence(&SvoTriple::new("John", "insulted", "Mary")), "John insulted Mary");
        assert_eq!(render_simple_sentence(&SvoTriple::new("Mary", "slept", "")), "Mary slept");
        assert_eq!(render_simple_sentence(&SvoTriple::new("he", "called", "her")), "he called her");
        assert_eq!(render_simple_sentence(&SvoTriple::new(" a  b ", "c", " ")), "a b c");
    }
}
