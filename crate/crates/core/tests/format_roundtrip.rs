use multievent::schema::{ContextSentence, EventMention, InferenceRecord, Provenance, RelationType};
use multievent::seqio::{
    mark_target, parse_prompt, parse_training_example, serialize_training_example, strip_markers, TrainingExample,
};
use proptest::prelude::*;

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z]{1,8}",
        Just("didn't".to_string()),
        Just("café".to_string()),
        Just("naïve".to_string()),
        Just("日本".to_string()),
        Just(",".to_string()),
        Just("\"quoted\"".to_string()),
        Just("[x]".to_string()),
    ]
}

/// A context, a word-aligned event span, a relation and an inference.
fn case() -> impl Strategy<Value = (Vec<String>, usize, usize, RelationType, String)> {
    prop::collection::vec(word(), 1..16).prop_flat_map(|words| {
        let n = words.len();
        (Just(words), 0..n)
            .prop_flat_map(move |(w, s)| (Just(w), Just(s), (s + 1)..=n))
            .prop_flat_map(|(w, s, e)| {
                (Just(w), Just(s), Just(e), prop::sample::select(RelationType::ALL.to_vec()), "[a-z ]{1,30}")
            })
    })
}

fn build(words: &[String], s: usize, e: usize) -> (ContextSentence, EventMention) {
    let text = words.join(" ");
    let ctx = ContextSentence::new("p", text.clone());
    let start: usize = words[..s].iter().map(|w| w.chars().count() + 1).sum();
    let len: usize = words[s..e].iter().map(|w| w.chars().count()).sum::<usize>() + (e - s - 1);
    let event = EventMention::from_span(&ctx, multievent::CharSpan::new(start, start + len)).unwrap();
    (ctx, event)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn serialize_then_parse_is_identity((words, s, e, rel, inf) in case()) {
        let (ctx, event) = build(&words, s, e);
        let record = InferenceRecord {
            context_id: "p".into(),
            event: event.clone(),
            relation: rel,
            inference: inf.clone(),
            provenance: Provenance::SilverSplit,
        };
        let ex = serialize_training_example(&record, &ctx).unwrap();
        let parsed = parse_training_example(&ex.input, &ex.target).unwrap();
        prop_assert_eq!(parsed.clone().into_record("p", Provenance::SilverSplit), record);
        prop_assert_eq!(&parsed.context, &ctx.text);

        let marked = mark_target(&ctx, &event).unwrap();
        prop_assert_eq!(strip_markers(&marked), ctx.text.clone());

        let prompt = parse_prompt(&ex.input).unwrap();
        prop_assert_eq!(prompt.target, Some(event.span));

        let json = serde_json::to_string(&ex).unwrap();
        prop_assert_eq!(serde_json::from_str::<TrainingExample>(&json).unwrap(), ex);
    }
}
