//! Target-marked input format for training and prompting.
//!
//! An input is the context with the target event enclosed between two
//! `<TGT>` markers, followed by the relation token and `[GEN]`:
//!
//! ```text
//! John <TGT> insulted <TGT> Mary, so she didn't reply when he called her xReason [GEN]
//! ```
//!
//! Markers are inserted as `"<TGT> "` before the span and `" <TGT>"` after it,
//! so deleting exactly those strings gives back the context byte-for-byte.
//! Fields are separated by a single space on write; the parser accepts any
//! whitespace run between the context, the relation and `[GEN]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{CharSpan, ContextSentence, EventMention, InferenceRecord, Provenance, RelationType};

pub const TGT: &str = "<TGT>";
pub const GEN: &str = "[GEN]";

const OPEN: &str = "<TGT> ";
const CLOSE: &str = " <TGT>";

/// Tokens a backend tokenizer must treat as atomic: the two markers plus
/// every relation token.
pub fn special_tokens() -> Vec<&'static str> {
    let mut out = vec![TGT, GEN];
    out.extend(RelationType::ALL.iter().map(|r| r.name()));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("missing [GEN]")]
    MissingGen,
    #[error("[GEN] count: expected exactly one, found {0}")]
    GenCount(usize),
    #[error("[GEN] must be the final token")]
    GenNotFinal,
    #[error("missing relation token before [GEN]")]
    MissingRelation,
    #[error("unknown relation token {0:?}")]
    UnknownRelation(String),
    #[error("marker count: expected 2 <TGT> markers, found {0}")]
    MarkerCount(usize),
    #[error("marker spacing: <TGT> markers must be written as \"<TGT> span <TGT>\"")]
    MarkerSpacing,
    #[error("context contains the reserved token {0}")]
    ReservedToken(&'static str),
    #[error("empty context")]
    EmptyContext,
    #[error("empty target span")]
    EmptySpan,
    #[error("span [{start}, {end}) out of bounds for a context of {len} characters")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
}

/// One `{input, target}` training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub input: String,
    pub target: String,
}

fn check_context(text: &str) -> Result<(), FormatError> {
    if text.trim().is_empty() {
        return Err(FormatError::EmptyContext);
    }
    for reserved in [TGT, GEN] {
        if text.contains(reserved) {
            return Err(FormatError::ReservedToken(reserved));
        }
    }
    Ok(())
}

/// Encloses the event span in `<TGT>` markers.
pub fn mark_target(context: &ContextSentence, event: &EventMention) -> Result<String, FormatError> {
    check_context(&context.text)?;
    let span = event.span;
    if span.is_empty() {
        return Err(FormatError::EmptySpan);
    }
    let range = span.byte_range(&context.text).map_err(|_| FormatError::SpanOutOfBounds {
        start: span.start,
        end: span.end,
        len: context.char_len(),
    })?;
    let text = &context.text;
    Ok(format!("{}{OPEN}{}{CLOSE}{}", &text[..range.start], &text[range.clone()], &text[range.end..]))
}

/// Prompt in the training-input format, without a target.
pub fn serialize_prompt(
    context: &ContextSentence,
    event: &EventMention,
    relation: RelationType,
) -> Result<String, FormatError> {
    Ok(format!("{} {} {GEN}", mark_target(context, event)?, relation.name()))
}

/// Unmarked prompt for a simple single-event head, as used when querying a
/// model with split sentences.
pub fn serialize_plain_prompt(head: &str, relation: RelationType) -> Result<String, FormatError> {
    check_context(head)?;
    Ok(format!("{} {} {GEN}", head.trim(), relation.name()))
}

pub fn serialize_training_example(
    record: &InferenceRecord,
    context: &ContextSentence,
) -> Result<TrainingExample, FormatError> {
    Ok(TrainingExample {
        input: serialize_prompt(context, &record.event, record.relation)?,
        target: record.inference.clone(),
    })
}

/// Training pairs for a record set, in record order.
pub fn serialize_records(
    records: &[InferenceRecord],
    contexts: &BTreeMap<String, ContextSentence>,
) -> crate::error::Result<Vec<TrainingExample>> {
    records
        .iter()
        .map(|r| {
            let context = contexts
                .get(&r.context_id)
                .ok_or_else(|| crate::error::Error::data(format!("record refers to unknown context {}", r.context_id)))?;
            Ok(serialize_training_example(r, context)?)
        })
        .collect()
}

/// A parsed prompt. `target` is `None` for unmarked prompts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub context: String,
    pub target: Option<CharSpan>,
    pub relation: RelationType,
}

/// Parses a prompt with either zero or two target markers.
pub fn parse_prompt(input: &str) -> Result<Prompt, FormatError> {
    let gen_count = input.matches(GEN).count();
    match gen_count {
        0 => return Err(FormatError::MissingGen),
        1 => {}
        n => return Err(FormatError::GenCount(n)),
    }
    let trimmed = input.trim_end();
    let body = trimmed.strip_suffix(GEN).ok_or(FormatError::GenNotFinal)?.trim_end();
    let split_at = body.rfind(char::is_whitespace).ok_or(FormatError::MissingRelation)?;
    let relation_token = &body[split_at..].trim_start();
    if relation_token.is_empty() {
        return Err(FormatError::MissingRelation);
    }
    let relation = relation_token
        .parse::<RelationType>()
        .map_err(|_| FormatError::UnknownRelation(relation_token.to_string()))?;
    let marked = body[..split_at].trim_end();

    let markers: Vec<usize> = marked.match_indices(TGT).map(|(i, _)| i).collect();
    match markers.len() {
        0 => {
            if marked.trim().is_empty() {
                return Err(FormatError::EmptyContext);
            }
            Ok(Prompt { context: marked.to_string(), target: None, relation })
        }
        2 => {
            let (open, close) = (markers[0], markers[1]);
            if !marked[open..].starts_with(OPEN) || close < open + OPEN.len() + 1 || !marked[..close].ends_with(' ') {
                return Err(FormatError::MarkerSpacing);
            }
            let pre = &marked[..open];
            let span_text = &marked[open + OPEN.len()..close - 1];
            let post = &marked[close + TGT.len()..];
            if span_text.is_empty() {
                return Err(FormatError::EmptySpan);
            }
            let start = pre.chars().count();
            let span = CharSpan::new(start, start + span_text.chars().count());
            Ok(Prompt { context: format!("{pre}{span_text}{post}"), target: Some(span), relation })
        }
        n => Err(FormatError::MarkerCount(n)),
    }
}

/// Fields recovered from a serialized training pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedExample {
    pub context: String,
    pub span: CharSpan,
    pub surface: String,
    pub relation: RelationType,
    pub inference: String,
}

impl ParsedExample {
    pub fn context_sentence(&self, context_id: &str) -> ContextSentence {
        ContextSentence::new(context_id, self.context.clone())
    }

    pub fn into_record(self, context_id: &str, provenance: Provenance) -> InferenceRecord {
        InferenceRecord {
            context_id: context_id.to_string(),
            event: EventMention { context_id: context_id.to_string(), span: self.span, surface: self.surface },
            relation: self.relation,
            inference: self.inference,
            provenance,
        }
    }
}

/// Inverse of [`serialize_training_example`].
pub fn parse_training_example(input: &str, target: &str) -> Result<ParsedExample, FormatError> {
    let prompt = parse_prompt(input)?;
    let span = prompt.target.ok_or(FormatError::MarkerCount(0))?;
    let surface = span.slice(&prompt.context).map_err(|_| FormatError::EmptySpan)?.to_string();
    Ok(ParsedExample { context: prompt.context, span, surface, relation: prompt.relation, inference: target.to_string() })
}

/// Removes the markers from a marked context.
pub fn strip_markers(marked: &str) -> String {
    marked.replacen(OPEN, "", 1).replacen(CLOSE, "", 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "John insulted Mary, so she didn't reply when he called her";

    fn sample() -> (ContextSentence, EventMention) {
        let ctx = ContextSentence::new("sample", SAMPLE);
        let ev = EventMention::find(&ctx, "insulted").unwrap();
        (ctx, ev)
    }

    #[test]
    fn marks_target_in_three_event_sentence() {
        let (ctx, ev) = sample();
        assert_eq!(
            mark_target(&ctx, &ev).unwrap(),
            "John <TGT> insulted <TGT> Mary, so she didn't reply when he called her"
        );
    }

    #[test]
    fn whole_sentence_span() {
        let ctx = ContextSentence::new("c", "Mary slept");
        let ev = EventMention::from_span(&ctx, CharSpan::new(0, 10)).unwrap();
        assert_eq!(mark_target(&ctx, &ev).unwrap(), "<TGT> Mary slept <TGT>");
    }

    #[test]
    fn zero_length_span_is_rejected() {
        let ctx = ContextSentence::new("c", "Mary slept");
        let ev = EventMention { context_id: "c".into(), span: CharSpan::new(3, 3), surface: String::new() };
        assert_eq!(mark_target(&ctx, &ev), Err(FormatError::EmptySpan));
        let ev = EventMention { context_id: "c".into(), span: CharSpan::new(5, 40), surface: String::new() };
        assert!(matches!(mark_target(&ctx, &ev), Err(FormatError::SpanOutOfBounds { .. })));
    }

    #[test]
    fn three_event_training_example() {
        let (ctx, ev) = sample();
        let record = InferenceRecord {
            context_id: ctx.id.clone(),
            event: ev,
            relation: RelationType::XReason,
            inference: "John does not like Mary".into(),
            provenance: Provenance::Human,
        };
        let ex = serialize_training_example(&record, &ctx).unwrap();
        assert_eq!(ex.input, "John <TGT> insulted <TGT> Mary, so she didn't reply when he called her xReason [GEN]");
        assert_eq!(ex.target, "John does not like Mary");
        let back = parse_training_example(&ex.input, &ex.target).unwrap();
        assert_eq!(back.context, SAMPLE);
        assert_eq!(back.clone().into_record(&ctx.id, Provenance::Human), record);
    }

    #[test]
    fn hindered_by_suffix() {
        let (ctx, ev) = sample();
        let p = serialize_prompt(&ctx, &ev, RelationType::HinderedBy).unwrap();
        assert!(p.ends_with("HinderedBy [GEN]"));
    }

    #[test]
    fn prompt_with_trailing_punctuation() {
        let ctx = ContextSentence::new("c", "Mary slept.");
        let ev = EventMention::find(&ctx, "slept").unwrap();
        let p = serialize_prompt(&ctx, &ev, RelationType::Causes).unwrap();
        assert_eq!(p, "Mary <TGT> slept <TGT>. Causes [GEN]");
        assert_eq!(p.matches(GEN).count(), 1);
        let record = InferenceRecord {
            context_id: "c".into(),
            event: ev,
            relation: RelationType::Causes,
            inference: "Mary is rested".into(),
            provenance: Provenance::Human,
        };
        assert_eq!(serialize_training_example(&record, &ctx).unwrap().input, p);
    }

    #[test]
    fn parse_errors_name_the_rule() {
        let err = parse_training_example("John <TGT> insulted <TGT> Mary xReason", "x").unwrap_err();
        assert_eq!(err.to_string(), "missing [GEN]");
        let err = parse_training_example("<TGT> a <TGT> b <TGT> c xReason [GEN]", "x").unwrap_err();
        assert!(err.to_string().starts_with("marker count"));
        let err = parse_training_example("John insulted Mary xReason [GEN]", "x").unwrap_err();
        assert!(err.to_string().starts_with("marker count"));
        let err = parse_training_example("John <TGT> insulted <TGT> Mary xWant [GEN]", "x").unwrap_err();
        assert_eq!(err, FormatError::UnknownRelation("xWant".into()));
        let err = parse_training_example("John <TGT> insulted <TGT> Mary [GEN] xReason", "x").unwrap_err();
        assert_eq!(err, FormatError::GenNotFinal);
    }

    #[test]
    fn parser_tolerates_extra_whitespace() {
        let p = parse_prompt("John <TGT> insulted <TGT> Mary   xReason \t [GEN]  ").unwrap();
        assert_eq!(p.context, "John insulted Mary");
        assert_eq!(p.target, Some(CharSpan::new(5, 13)));
    }

    #[test]
    fn plain_prompts_parse_without_target() {
        let p = parse_prompt(&serialize_plain_prompt("John insulted Mary", RelationType::XReason).unwrap()).unwrap();
        assert_eq!(p, Prompt { context: "John insulted Mary".into(), target: None, relation: RelationType::XReason });
    }

    #[test]
    fn reserved_tokens_in_context() {
        let ctx = ContextSentence::new("c", "say [GEN] now");
        let ev = EventMention::find(&ctx, "say").unwrap();
        assert_eq!(mark_target(&ctx, &ev), Err(FormatError::ReservedToken(GEN)));
    }

    #[test]
    fn registry() {
        let tokens = special_tokens();
        assert_eq!(tokens.len(), 8);
        assert!(tokens.contains(&"<TGT>") && tokens.contains(&"[GEN]") && tokens.contains(&"isBefore"));
    }

    #[test]
    fn strip_recovers_context() {
        let (ctx, ev) = sample();
        assert_eq!(strip_markers(&mark_target(&ctx, &ev).unwrap()), SAMPLE);
    }
}
