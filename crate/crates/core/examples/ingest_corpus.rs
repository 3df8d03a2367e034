//! Selects multi-event sentences from the bundled sample corpus.

use multievent::corpus::{ingest, CorpusDoc};
use multievent::schema::read_jsonl;
use multievent::tagging::RuleTagger;

fn main() -> multievent::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample_corpus.jsonl");
    let docs: Vec<CorpusDoc> = read_jsonl(path.as_ref())?;
    let selected = ingest(&docs, 3, 2, &RuleTagger)?;
    println!("{} documents -> {} multi-event sentences\n", docs.len(), selected.len());
    for c in &selected {
        let events: Vec<&str> = c.events.iter().map(|e| e.surface.as_str()).collect();
        println!("[{}] {}\n    events: {}", c.context.topic, c.context.text, events.join(" | "));
    }
    Ok(())
}
