//! Relation schema and the shared domain types: contexts, event mentions,
//! inference records and dataset splits, plus the JSONL record format.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{char_to_byte, normalize_inference};

/// The six event-centric relations.
///
/// Names serialize exactly as the relation tokens used in training inputs
/// (`isBefore`, not `IsBefore`), so serialized data stays compatible with
/// existing checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationType {
    HasPrerequisite,
    #[serde(rename = "isBefore")]
    IsBefore,
    #[serde(rename = "isAfter")]
    IsAfter,
    #[serde(rename = "xReason")]
    XReason,
    Causes,
    HinderedBy,
}

/// Whether an NLI filter keeps candidates entailed by, or contradicting, the context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Entailment,
    Contradiction,
}

impl RelationType {
    pub const ALL: [RelationType; 6] = [
        RelationType::HasPrerequisite,
        RelationType::IsBefore,
        RelationType::IsAfter,
        RelationType::XReason,
        RelationType::Causes,
        RelationType::HinderedBy,
    ];

    /// Relation token as it appears in serialized inputs.
    pub fn name(self) -> &'static str {
        match self {
            RelationType::HasPrerequisite => "HasPrerequisite",
            RelationType::IsBefore => "isBefore",
            RelationType::IsAfter => "isAfter",
            RelationType::XReason => "xReason",
            RelationType::Causes => "Causes",
            RelationType::HinderedBy => "HinderedBy",
        }
    }

    /// Crowdsourcing question template.
    pub fn question(self) -> &'static str {
        match self {
            RelationType::HasPrerequisite => "What are typically the prerequisites for the event?",
            RelationType::IsBefore => "What typically happens immediately before the event?",
            RelationType::IsAfter => "What typically happens immediately after the event?",
            RelationType::XReason => "What can cause the event?",
            RelationType::Causes => "What could be the effect of the event?",
            RelationType::HinderedBy => "What can hinder the event?",
        }
    }

    /// Label used when rendering inferences in reports. Presentation only.
    pub fn surface_prefix(self) -> &'static str {
        match self {
            RelationType::HasPrerequisite => "Needed before,",
            RelationType::IsBefore => "Before this,",
            RelationType::IsAfter => "After this,",
            RelationType::XReason => "Because,",
            RelationType::Causes => "This causes,",
            RelationType::HinderedBy => "Hindered by,",
        }
    }

    pub fn polarity(self) -> Polarity {
        match self {
            RelationType::HinderedBy => Polarity::Contradiction,
            _ => Polarity::Entailment,
        }
    }

    pub fn index(self) -> usize {
        RelationType::ALL.iter().position(|r| *r == self).unwrap()
    }
}

/// Question template for a relation.
pub fn relation_question(relation: RelationType) -> &'static str {
    relation.question()
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RelationType::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::data(format!("unknown relation token {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    News,
    Dialogue,
    Narrative,
    Blog,
    #[default]
    Other,
}

/// A (typically long, multi-event) sentence that serves as inference context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSentence {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub source: Source,
    #[serde(default)]
    pub topic: String,
}

impl ContextSentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        ContextSentence { id: id.into(), text: text.into(), source: Source::Other, topic: String::new() }
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Half-open character range `[start, end)`. Serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// Byte range of this span within `text`, if the span is non-empty and in bounds.
    pub fn byte_range(&self, text: &str) -> Result<std::ops::Range<usize>> {
        let err = || Error::Span { start: self.start, end: self.end, len: text.chars().count() };
        if self.start >= self.end {
            return Err(err());
        }
        let start = char_to_byte(text, self.start).ok_or_else(err)?;
        let end = char_to_byte(text, self.end).ok_or_else(err)?;
        Ok(start..end)
    }

    pub fn slice<'a>(&self, text: &'a str) -> Result<&'a str> {
        Ok(&text[self.byte_range(text)?])
    }

    pub fn overlaps(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl From<[usize; 2]> for CharSpan {
    fn from(v: [usize; 2]) -> Self {
        CharSpan::new(v[0], v[1])
    }
}

impl From<CharSpan> for [usize; 2] {
    fn from(s: CharSpan) -> Self {
        [s.start, s.end]
    }
}

/// A target predicate inside a context sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventMention {
    pub context_id: String,
    pub span: CharSpan,
    pub surface: String,
}

impl EventMention {
    /// Builds a mention whose surface is read off the context at `span`.
    pub fn from_span(context: &ContextSentence, span: CharSpan) -> Result<Self> {
        let surface = span.slice(&context.text)?.to_string();
        Ok(EventMention { context_id: context.id.clone(), span, surface })
    }

    /// Locates the first occurrence of `surface` in the context.
    pub fn find(context: &ContextSentence, surface: &str) -> Option<Self> {
        let byte = context.text.find(surface)?;
        let start = context.text[..byte].chars().count();
        let span = CharSpan::new(start, start + surface.chars().count());
        EventMention::from_span(context, span).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Human,
    SilverSplit,
    SilverOverlap,
    SilverNli,
    Generated,
}

/// One (context, target event, relation, inference) tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceRecord {
    pub context_id: String,
    pub event: EventMention,
    pub relation: RelationType,
    pub inference: String,
    pub provenance: Provenance,
}

/// A detected invariant violation. Display strings are stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MalformedIdentifier(String),
    EmptyContext,
    ContextMismatch { record: String, context: String },
    EventContextMismatch,
    SpanOrder,
    SpanOutOfBounds,
    SurfaceMismatch,
    EmptyInference,
    VerbatimRepetition,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MalformedIdentifier(id) => write!(f, "malformed identifier {id:?}"),
            Violation::EmptyContext => f.write_str("empty context text"),
            Violation::ContextMismatch { record, context } => {
                write!(f, "context id mismatch ({record} vs {context})")
            }
            Violation::EventContextMismatch => f.write_str("event context id differs from record"),
            Violation::SpanOrder => f.write_str("span start ≥ end"),
            Violation::SpanOutOfBounds => f.write_str("span out of bounds"),
            Violation::SurfaceMismatch => f.write_str("surface does not match span"),
            Violation::EmptyInference => f.write_str("empty inference"),
            Violation::VerbatimRepetition => f.write_str("verbatim repetition"),
        }
    }
}

fn well_formed_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c.is_control())
}

/// Checks a record against its context. An empty list means the record is valid.
pub fn validate_record(record: &InferenceRecord, context: &ContextSentence) -> Vec<Violation> {
    let mut out = Vec::new();
    for id in [&record.context_id, &context.id] {
        if !well_formed_id(id) {
            out.push(Violation::MalformedIdentifier(id.clone()));
        }
    }
    if record.context_id != context.id {
        out.push(Violation::ContextMismatch { record: record.context_id.clone(), context: context.id.clone() });
    }
    if record.event.context_id != record.context_id {
        out.push(Violation::EventContextMismatch);
    }
    if context.text.trim().is_empty() {
        out.push(Violation::EmptyContext);
    }
    let span = record.event.span;
    if span.start >= span.end {
        out.push(Violation::SpanOrder);
    } else if span.end > context.char_len() {
        out.push(Violation::SpanOutOfBounds);
    } else if span.slice(&context.text).map(|s| s != record.event.surface).unwrap_or(true) {
        out.push(Violation::SurfaceMismatch);
    }
    if record.inference.trim().is_empty() {
        out.push(Violation::EmptyInference);
    } else if normalize_inference(&record.inference) == normalize_inference(&record.event.surface) {
        out.push(Violation::VerbatimRepetition);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub records: Vec<InferenceRecord>,
}

/// One line of the JSONL record format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLine {
    pub context_id: String,
    pub context_text: String,
    pub event_span: CharSpan,
    pub event_surface: String,
    pub relation: RelationType,
    pub inference: String,
    pub provenance: Provenance,
}

impl RecordLine {
    pub fn new(record: &InferenceRecord, context_text: &str) -> Self {
        RecordLine {
            context_id: record.context_id.clone(),
            context_text: context_text.to_string(),
            event_span: record.event.span,
            event_surface: record.event.surface.clone(),
            relation: record.relation,
            inference: record.inference.clone(),
            provenance: record.provenance,
        }
    }

    pub fn context(&self) -> ContextSentence {
        ContextSentence::new(self.context_id.clone(), self.context_text.clone())
    }

    pub fn record(&self) -> InferenceRecord {
        InferenceRecord {
            context_id: self.context_id.clone(),
            event: EventMention {
                context_id: self.context_id.clone(),
                span: self.event_span,
                surface: self.event_surface.clone(),
            },
            relation: self.relation,
            inference: self.inference.clone(),
            provenance: self.provenance,
        }
    }
}

/// Records plus the context texts they refer to, as loaded from JSONL.
#[derive(Debug, Clone, Default)]
pub struct RecordSet {
    pub records: Vec<InferenceRecord>,
    pub contexts: BTreeMap<String, ContextSentence>,
}

impl RecordSet {
    pub fn from_lines(lines: &[RecordLine]) -> Result<Self> {
        let mut set = RecordSet::default();
        for line in lines {
            let ctx = line.context();
            if let Some(prev) = set.contexts.get(&ctx.id) {
                if prev.text != ctx.text {
                    return Err(Error::data(format!("context {} appears with two different texts", ctx.id)));
                }
            } else {
                set.contexts.insert(ctx.id.clone(), ctx);
            }
            set.records.push(line.record());
        }
        Ok(set)
    }

    pub fn lines(&self) -> Vec<RecordLine> {
        self.records
            .iter()
            .map(|r| {
                let text = self.contexts.get(&r.context_id).map(|c| c.text.as_str()).unwrap_or_default();
                RecordLine::new(r, text)
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        RecordSet::from_lines(&read_jsonl(path)?)
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .map_err(|e| Error::data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(value);
    }
    Ok(out)
}

/// Writes one JSON object per line, LF-terminated.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    const SAMPLE: &str = "John insulted Mary, so she didn't reply when he called her";

    fn record(context: &ContextSentence, surface: &str, inference: &str) -> InferenceRecord {
        InferenceRecord {
            context_id: context.id.clone(),
            event: EventMention::find(context, surface).unwrap(),
            relation: RelationType::XReason,
            inference: inference.into(),
            provenance: Provenance::Human,
        }
    }

    #[test]
    fn question_templates() {
        assert_eq!(
            relation_question(RelationType::HasPrerequisite),
            "What are typically the prerequisites for the event?"
        );
        assert_eq!(relation_question(RelationType::HinderedBy), "What can hinder the event?");
        assert_eq!(
            relation_question(RelationType::IsAfter),
            "What typically happens immediately after the event?"
        );
    }

    #[test]
    fn questions_and_names_are_injective() {
        let q: HashSet<_> = RelationType::ALL.iter().map(|r| r.question()).collect();
        let n: HashSet<_> = RelationType::ALL.iter().map(|r| r.name()).collect();
        assert_eq!(q.len(), 6);
        assert_eq!(n.len(), 6);
        for r in RelationType::ALL {
            assert_eq!(r.name().parse::<RelationType>().unwrap(), r);
        }
    }

    #[test]
    fn hindered_by_is_the_only_contradiction_relation() {
        let contra: Vec<_> =
            RelationType::ALL.into_iter().filter(|r| r.polarity() == Polarity::Contradiction).collect();
        assert_eq!(contra, vec![RelationType::HinderedBy]);
    }

    #[test]
    fn relation_serializes_as_token() {
        assert_eq!(serde_json::to_string(&RelationType::IsBefore).unwrap(), "\"isBefore\"");
        assert_eq!(serde_json::to_string(&RelationType::HinderedBy).unwrap(), "\"HinderedBy\"");
    }

    #[test]
    fn well_formed_record_passes() {
        let ctx = ContextSentence::new("c1", SAMPLE);
        assert!(validate_record(&record(&ctx, "insulted", "John does not like Mary"), &ctx).is_empty());
    }

    #[test]
    fn reversed_span_is_flagged() {
        let ctx = ContextSentence::new("c1", SAMPLE);
        let mut r = record(&ctx, "insulted", "John does not like Mary");
        r.event.span = CharSpan::new(5, 3);
        let v = validate_record(&r, &ctx);
        assert_eq!(v, vec![Violation::SpanOrder]);
        assert_eq!(v[0].to_string(), "span start ≥ end");
    }

    #[test]
    fn verbatim_inference_is_flagged() {
        let ctx = ContextSentence::new("c1", SAMPLE);
        let v = validate_record(&record(&ctx, "insulted", "Insulted."), &ctx);
        assert_eq!(v, vec![Violation::VerbatimRepetition]);
        assert_eq!(v[0].to_string(), "verbatim repetition");
    }

    #[test]
    fn malformed_identifiers_are_violations() {
        let ctx = ContextSentence::new("", SAMPLE);
        let r = record(&ctx, "called", "he wants to talk");
        assert!(validate_record(&r, &ctx).iter().any(|v| matches!(v, Violation::MalformedIdentifier(_))));
    }

    #[test]
    fn record_line_json_shape() {
        let ctx = ContextSentence::new("c1", SAMPLE);
        let line = RecordLine::new(&record(&ctx, "insulted", "John does not like Mary"), &ctx.text);
        let json = serde_json::to_value(&line).unwrap();
        assert_eq!(json["event_span"], serde_json::json!([5, 13]));
        assert_eq!(json["relation"], "xReason");
        assert_eq!(json["provenance"], "human");
        let back: RecordLine = serde_json::from_value(json).unwrap();
        assert_eq!(back, line);
    }

    #[test]
    fn spans_are_character_offsets() {
        let ctx = ContextSentence::new("c", "Zoë smiled and left");
        let ev = EventMention::find(&ctx, "smiled").unwrap();
        assert_eq!(ev.span, CharSpan::new(4, 10));
        assert_eq!(ev.span.slice(&ctx.text).unwrap(), "smiled");
    }
}
