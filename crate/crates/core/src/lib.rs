//! Toolkit for event-centric commonsense inference over complex, multi-event
//! sentences.
//!
//! The crate covers the full data path: picking complex sentences out of raw
//! corpora and locating their verb events ([`corpus`]), splitting them into
//! simple clauses ([`splitter`]), building silver-standard labels with three
//! selection strategies ([`silverlab`]), serializing target-marked training
//! examples ([`seqio`]), training and querying sequence-to-sequence backends
//! ([`modelkit`]) and scoring generations against references ([`evalkit`]).
//! [`cli`] wires the stages together behind the `multievent` binary.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod modelkit;
pub mod schema;
pub mod seqio;
pub mod silverlab;
pub mod splitter;
pub mod tagging;
pub mod text;
pub mod toydata;

pub use error::{BackendError, Error, Result};
pub use schema::{
    CharSpan, ContextSentence, DatasetSplit, EventMention, InferenceRecord, Provenance,
    RelationType, Source, SplitName,
};
