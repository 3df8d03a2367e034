//! The six relations, their questions, and record validation.

use multievent::schema::{validate_record, ContextSentence, EventMention, InferenceRecord, Provenance, RelationType};

fn main() {
    for r in RelationType::ALL {
        println!("{:<16} {:?}  {}", r.name(), r.polarity(), r.question());
    }

    let ctx = ContextSentence::new("c1", "John insulted Mary, so she didn't reply when he called her");
    let event = EventMention::find(&ctx, "didn't reply").expect("event occurs");
    let good = InferenceRecord {
        context_id: ctx.id.clone(),
        event: event.clone(),
        relation: RelationType::XReason,
        inference: "Mary was upset with John".into(),
        provenance: Provenance::Human,
    };
    let echo = InferenceRecord { inference: "didn't reply".into(), ..good.clone() };
    println!("\nvalid record: {:?}", validate_record(&good, &ctx));
    println!("echoing record: {:?}", validate_record(&echo, &ctx));
}
