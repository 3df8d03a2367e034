//! Target-marked training pairs and their round trip.

use multievent::schema::{ContextSentence, EventMention, RelationType};
use multievent::seqio::{parse_prompt, serialize_plain_prompt, serialize_prompt, strip_markers};

fn main() -> multievent::Result<()> {
    let ctx = ContextSentence::new("c1", "John insulted Mary, so she didn't reply when he called her");
    for surface in ["insulted", "didn't reply", "called"] {
        let event = EventMention::find(&ctx, surface).expect("event occurs");
        let prompt = serialize_prompt(&ctx, &event, RelationType::Causes)?;
        let parsed = parse_prompt(&prompt)?;
        println!("{prompt}");
        println!("    target span {:?}, markers stripped equal context: {}", parsed.target, strip_markers(&prompt) == format!("{} Causes [GEN]", ctx.text));
    }
    println!("\nplain head: {}", serialize_plain_prompt("John insulted Mary", RelationType::IsAfter)?);
    Ok(())
}
