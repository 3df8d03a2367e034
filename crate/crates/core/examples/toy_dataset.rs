//! Writes the synthetic multi-event dataset as records JSONL.
//!
//! ```text
//! cargo run --example toy_dataset -- out.jsonl [contexts] [seed]
//! ```

use multievent::schema::{write_jsonl, RecordLine};
use multievent::toydata::toy_dataset;

fn main() -> multievent::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args.first().map(String::as_str).unwrap_or("toy_records.jsonl");
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(7);

    let (contexts, records) = toy_dataset(n, seed);
    let text = |id: &str| contexts.iter().find(|c| c.id == id).map(|c| c.text.as_str()).unwrap_or_default();
    let lines: Vec<RecordLine> = records.iter().map(|r| RecordLine::new(r, text(&r.context_id))).collect();
    write_jsonl(out.as_ref(), &lines)?;
    println!("{} contexts, {} records -> {out}", contexts.len(), lines.len());
    for c in contexts.iter().take(3) {
        println!("  {}: {}", c.id, c.text);
    }
    Ok(())
}
