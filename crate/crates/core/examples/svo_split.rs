//! Splits a multi-event sentence into simple subject-verb-object clauses
//! and aligns each target event with its clause.
//!
//! Pass a path to also write the extractions as a replay fixture.

use multievent::corpus::{ingest, CorpusDoc};
use multievent::schema::{read_jsonl, write_jsonl, ContextSentence};
use multievent::splitter::{align_predicate, extract_svo, render_simple_sentence, HeuristicOie, ReplayOie};
use multievent::tagging::RuleTagger;
use multievent::toydata::held_out_sentence;

fn main() -> multievent::Result<()> {
    let oie = HeuristicOie::default();
    let (ctx, events) = held_out_sentence();
    let triples = extract_svo(&ctx, &oie)?;
    println!("{}\n", ctx.text);
    for t in &triples {
        println!("  ({}; {}; {})", t.subject, t.predicate, t.object);
    }
    println!();
    for e in &events {
        match align_predicate(&triples, e) {
            Some(t) => println!("  {:<14} -> {}", e.surface, render_simple_sentence(&t)),
            None => println!("  {:<14} -> (no clause)", e.surface),
        }
    }

    if let Some(out) = std::env::args().nth(1) {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample_corpus.jsonl");
        let docs: Vec<CorpusDoc> = read_jsonl(path.as_ref())?;
        let contexts: Vec<ContextSentence> = ingest(&docs, 3, 2, &RuleTagger)?.into_iter().map(|c| c.context).collect();
        let lines = ReplayOie::record(&oie, &contexts)?;
        write_jsonl(out.as_ref(), &lines)?;
        println!("\nwrote {} fixture lines to {out}", lines.len());
    }
    Ok(())
}
