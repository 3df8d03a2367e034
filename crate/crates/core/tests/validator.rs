use multievent::schema::{validate_record, CharSpan, InferenceRecord, Violation};
use multievent::toydata::toy_contexts;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
enum Corruption {
    EmptyInference,
    Echo,
    SpanOrder,
    OutOfBounds,
    Surface,
    BadId,
    WrongContext,
}

const ALL: [Corruption; 7] = [
    Corruption::EmptyInference,
    Corruption::Echo,
    Corruption::SpanOrder,
    Corruption::OutOfBounds,
    Corruption::Surface,
    Corruption::BadId,
    Corruption::WrongContext,
];

fn corrupt(r: &mut InferenceRecord, c: Corruption, text_len: usize) {
    match c {
        Corruption::EmptyInference => r.inference = "  ".into(),
        Corruption::Echo => r.inference = format!(" {} ", r.event.surface.to_uppercase()),
        Corruption::SpanOrder => r.event.span = CharSpan::new(r.event.span.end, r.event.span.start),
        Corruption::OutOfBounds => r.event.span = CharSpan::new(text_len - 1, text_len + 3),
        Corruption::Surface => r.event.surface.push('x'),
        Corruption::BadId => {
            r.context_id = "bad id".into();
            r.event.context_id = "bad id".into();
        }
        Corruption::WrongContext => {
            r.context_id = "elsewhere".into();
            r.event.context_id = "elsewhere".into();
        }
    }
}

fn flagged(c: Corruption, v: &[Violation]) -> bool {
    v.iter().any(|v| match c {
        Corruption::EmptyInference => *v == Violation::EmptyInference,
        Corruption::Echo => *v == Violation::VerbatimRepetition,
        Corruption::SpanOrder => *v == Violation::SpanOrder,
        Corruption::OutOfBounds => *v == Violation::SpanOutOfBounds,
        Corruption::Surface => *v == Violation::SurfaceMismatch,
        Corruption::BadId => matches!(v, Violation::MalformedIdentifier(_)),
        Corruption::WrongContext => matches!(v, Violation::ContextMismatch { .. }),
    })
}

#[test]
fn seeded_corruptions_are_flagged_and_clean_records_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let contexts = toy_contexts(80, 9);
    let mut corrupted = 0;
    for c in &contexts {
        for mut r in c.gold_records() {
            if rng.random_bool(0.3) {
                let kind = *ALL.choose(&mut rng).unwrap();
                corrupt(&mut r, kind, c.context.char_len());
                let v = validate_record(&r, &c.context);
                assert!(flagged(kind, &v), "{kind:?} not flagged on {r:?}: {v:?}");
                corrupted += 1;
            } else {
                assert_eq!(validate_record(&r, &c.context), vec![], "{r:?}");
            }
        }
    }
    assert!(corrupted > 500);
}
