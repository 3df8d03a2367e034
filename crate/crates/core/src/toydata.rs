//! A small synthetic world of people and everyday social events.
//!
//! It provides what the end-to-end demos and tests need without external
//! resources:
//!
//! - a single-event knowledge base (`"John insulted Mary"` → inferences per
//!   relation), used to pretrain a reference [`TinySeq2Seq`] that plays the
//!   role of an off-the-shelf single-event knowledge model;
//! - multi-event sentences with gold inferences per target event, where the
//!   gold set for an event also mentions the other events it is ordered or
//!   causally linked with.

use std::path::PathBuf;
use std::sync::OnceLock;

use log::info;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::modelkit::{fine_tune, Seq2SeqBackend, TinyConfig, TinySeq2Seq, TrainConfig};
use crate::schema::{ContextSentence, EventMention, InferenceRecord, Provenance, RelationType, Source};
use crate::seqio::{serialize_plain_prompt, TrainingExample};
use crate::text::fnv1a;

/// Environment variable naming the directory where pretrained backends are
/// cached.
pub const CACHE_ENV: &str = "MULTIEVENT_CACHE_DIR";

pub const NAMES: [&str; 6] = ["John", "Mary", "Tom", "Anna", "Mike", "Sara"];

/// Never generated as a training context.
pub const HELD_OUT_SENTENCE: &str = "John insulted Mary, so she didn't reply when he called her";

/// An event type with per-relation inference templates. `{S}` and `{O}`
/// stand for the subject and object.
pub struct ToyVerb {
    pub surface: &'static str,
    pub transitive: bool,
    templates: [[&'static str; 2]; 6],
}

macro_rules! verb {
    ($surface:expr, $tr:expr, [$($a:expr, $b:expr);* $(;)?]) => {
        ToyVerb { surface: $surface, transitive: $tr, templates: [$([$a, $b]),*] }
    };
}

// relation order: HasPrerequisite, isBefore, isAfter, xReason, Causes, HinderedBy
pub const VERBS: [ToyVerb; 14] = [
    verb!("insulted", true, [
        "{S} is angry at {O}", "{S} meets {O}";
        "{S} argues with {O}", "{O} annoys {S}";
        "{O} feels hurt", "{O} walks away";
        "{S} is mad at {O}", "{S} wants to hurt {O}";
        "{O} feels sad", "{O} gets upset";
        "{S} is kind to {O}", "{S} likes {O}";
    ]),
    verb!("called", true, [
        "{S} has a phone", "{S} knows the number of {O}";
        "{S} picks up the phone", "{S} dials the number";
        "{S} talks to {O}", "{S} waits for an answer";
        "{S} wants to talk to {O}", "{S} misses {O}";
        "the phone of {O} rings", "{O} gets a call";
        "{S} lost the phone", "the phone is dead";
    ]),
    verb!("helped", true, [
        "{S} has free time", "{S} sees that {O} needs help";
        "{O} asks {S} for help", "{O} has a problem";
        "{O} thanks {S}", "{O} feels relieved";
        "{S} is kind", "{S} cares about {O}";
        "{O} feels grateful", "{O} finishes the work";
        "{S} is too busy", "{S} is sick";
    ]),
    verb!("thanked", true, [
        "{O} did something nice", "{S} got a favor";
        "{O} helps {S}", "{O} gives {S} a gift";
        "{O} smiles", "{O} says you are welcome";
        "{S} is grateful to {O}", "{S} is polite";
        "{O} feels appreciated", "{O} feels happy";
        "{S} is rude", "{S} forgot";
    ]),
    verb!("hugged", true, [
        "{S} is close to {O}", "{S} opens the arms";
        "{S} walks up to {O}", "{S} sees {O}";
        "{O} hugs {S} back", "{S} lets go";
        "{S} loves {O}", "{S} missed {O}";
        "{O} feels loved", "{O} feels warm";
        "{O} pushes {S} away", "{S} is shy";
    ]),
    verb!("ignored", true, [
        "{S} is upset with {O}", "{O} tries to talk to {S}";
        "{O} says hello", "{O} waves at {S}";
        "{O} gives up", "{O} leaves";
        "{S} is angry at {O}", "{S} does not like {O}";
        "{O} feels lonely", "{O} feels rejected";
        "{S} is friendly", "{O} is too loud";
    ]),
    verb!("visited", true, [
        "{S} knows where {O} lives", "{S} has a car";
        "{S} drives to the house of {O}", "{S} knocks on the door";
        "{S} has dinner with {O}", "{S} goes home";
        "{S} misses {O}", "{S} wants to see {O}";
        "{O} is happy to see {S}", "{O} makes tea";
        "{S} is too far away", "{O} is not home";
    ]),
    verb!("praised", true, [
        "{O} did a good job", "{S} watches {O}";
        "{O} finishes the project", "{O} shows the work to {S}";
        "{O} thanks {S}", "{O} smiles";
        "{S} is impressed by {O}", "{S} likes the work";
        "{O} feels proud", "{O} works harder";
        "{O} made a mistake", "{S} is jealous of {O}";
    ]),
    verb!("invited", true, [
        "{S} plans a party", "{S} knows {O}";
        "{S} sends a message to {O}", "{S} writes a card";
        "{O} comes to the party", "{O} says yes";
        "{S} likes {O}", "{S} wants company";
        "{O} feels welcome", "{O} gets ready";
        "{O} is busy", "{S} has no space";
    ]),
    verb!("blamed", true, [
        "something went wrong", "{S} is upset";
        "{S} finds the mistake", "{S} gets angry";
        "{O} says sorry", "{O} feels guilty";
        "{S} thinks {O} did it", "{S} is frustrated";
        "{O} feels bad", "{O} argues with {S}";
        "{O} has proof", "{S} made the mistake";
    ]),
    verb!("didn't reply", false, [
        "{S} got a message", "{S} has a phone";
        "{S} reads the message", "{S} hears the phone";
        "{S} stays quiet", "{S} turns off the phone";
        "{S} is upset", "{S} does not want to talk";
        "the caller is worried", "the caller waits";
        "{S} wants to make up", "{S} feels sorry";
    ]),
    verb!("cried", false, [
        "{S} is sad", "{S} hears bad news";
        "{S} gets hurt", "{S} feels upset";
        "{S} wipes the tears", "{S} feels better";
        "{S} is hurt", "{S} is very sad";
        "{S} has red eyes", "others comfort {S}";
        "{S} is happy", "{S} holds back the tears";
    ]),
    verb!("left", false, [
        "{S} is ready to go", "{S} has the keys";
        "{S} puts on a coat", "{S} says goodbye";
        "{S} walks home", "the room is quiet";
        "{S} is tired", "{S} wants to be alone";
        "{S} is gone", "others miss {S}";
        "the door is locked", "{S} is asked to stay";
    ]),
    verb!("smiled", false, [
        "{S} is in a good mood", "{S} sees something nice";
        "{S} hears a joke", "{S} gets good news";
        "{S} laughs", "{S} feels good";
        "{S} is happy", "{S} is pleased";
        "others smile back", "{S} looks friendly";
        "{S} is sad", "{S} is in pain";
    ]),
];

pub fn verb(surface: &str) -> Option<&'static ToyVerb> {
    VERBS.iter().find(|v| v.surface == surface)
}

/// One event instance: who did what to whom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyEvent {
    pub subject: String,
    pub verb: &'static str,
    pub object: Option<String>,
}

impl ToyEvent {
    pub fn new(subject: &str, verb: &'static str, object: Option<&str>) -> Self {
        ToyEvent { subject: subject.to_string(), verb, object: object.map(str::to_string) }
    }

    fn spec(&self) -> &'static ToyVerb {
        verb(self.verb).expect("known verb")
    }

    /// The event as a simple sentence, e.g. `"John insulted Mary"`.
    pub fn clause(&self) -> String {
        match &self.object {
            Some(o) => format!("{} {} {}", self.subject, self.verb, o),
            None => format!("{} {}", self.subject, self.verb),
        }
    }

    /// Template inferences for `relation`.
    pub fn inferences(&self, relation: RelationType) -> Vec<String> {
        let obj = self.object.as_deref().unwrap_or("them");
        self.spec().templates[relation.index()]
            .iter()
            .map(|t| t.replace("{S}", &self.subject).replace("{O}", obj))
            .collect()
    }
}

impl std::fmt::Debug for ToyVerb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.surface)
    }
}

/// Every string the world can produce, for building output vocabularies.
pub fn vocabulary_texts() -> Vec<String> {
    let mut out: Vec<String> = NAMES.iter().map(|n| n.to_string()).collect();
    out.push("them".into());
    for v in &VERBS {
        out.push(v.surface.to_string());
        for pair in &v.templates {
            out.extend(pair.iter().map(|t| t.to_string()));
        }
    }
    out
}

/// Single-event heads with their template inferences, as plain prompts.
/// Each transitive verb is paired with `pairs_per_verb` seeded
/// subject/object pairs; intransitive verbs take every name.
pub fn simple_kb(pairs_per_verb: usize, seed: u64) -> Vec<TrainingExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all_pairs = Vec::new();
    for s in NAMES {
        for o in NAMES {
            if s != o {
                all_pairs.push((s, o));
            }
        }
    }
    let mut out = Vec::new();
    for v in &VERBS {
        let events: Vec<ToyEvent> = if v.transitive {
            all_pairs.choose_multiple(&mut rng, pairs_per_verb).map(|(s, o)| ToyEvent::new(s, v.surface, Some(o))).collect()
        } else {
            NAMES.iter().map(|s| ToyEvent::new(s, v.surface, None)).collect()
        };
        for e in events {
            for rel in RelationType::ALL {
                let input = serialize_plain_prompt(&e.clause(), rel).expect("valid head");
                for target in e.inferences(rel) {
                    out.push(TrainingExample { input: input.clone(), target });
                }
            }
        }
    }
    out
}

/// A generated multi-event sentence with its events and their links.
#[derive(Debug, Clone)]
pub struct ToyContext {
    pub context: ContextSentence,
    pub events: Vec<(ToyEvent, EventMention)>,
    /// `(a, b)`: event `a` happens before event `b`.
    pub before: Vec<(usize, usize)>,
    /// `(a, b)`: event `a` causes event `b`.
    pub causes: Vec<(usize, usize)>,
}

impl ToyContext {
    /// Gold inferences for every event and relation.
    pub fn gold_records(&self) -> Vec<InferenceRecord> {
        let mut out = Vec::new();
        for (i, (ev, mention)) in self.events.iter().enumerate() {
            for rel in RelationType::ALL {
                let mut infs = ev.inferences(rel);
                for &(a, b) in &self.before {
                    if rel == RelationType::IsAfter && a == i {
                        infs.push(self.events[b].0.clause());
                    }
                    if rel == RelationType::IsBefore && b == i {
                        infs.push(self.events[a].0.clause());
                    }
                }
                for &(a, b) in &self.causes {
                    if rel == RelationType::Causes && a == i {
                        infs.push(self.events[b].0.clause());
                    }
                    if rel == RelationType::XReason && b == i {
                        infs.push(self.events[a].0.clause());
                    }
                }
                for inference in infs {
                    out.push(InferenceRecord {
                        context_id: self.context.id.clone(),
                        event: mention.clone(),
                        relation: rel,
                        inference,
                        provenance: Provenance::Human,
                    });
                }
            }
        }
        out
    }
}

fn distinct_names<R: Rng>(rng: &mut R, k: usize) -> Vec<&'static str> {
    NAMES.choose_multiple(rng, k).copied().collect()
}

fn pick_verbs<R: Rng>(rng: &mut R, transitive: bool, k: usize, exclude: &[&str]) -> Vec<&'static str> {
    let pool: Vec<&'static str> =
        VERBS.iter().filter(|v| v.transitive == transitive && !exclude.contains(&v.surface)).map(|v| v.surface).collect();
    pool.choose_multiple(rng, k).copied().collect()
}

fn build(id: String, text: String, events: Vec<ToyEvent>, before: Vec<(usize, usize)>, causes: Vec<(usize, usize)>) -> ToyContext {
    let context = ContextSentence { source: Source::Narrative, topic: "toy".into(), ..ContextSentence::new(id, text) };
    // locate each verb after the previous one so repeated words resolve in order
    let mut from = 0usize;
    let mut located = Vec::new();
    for ev in events {
        let byte = context.text.char_indices().nth(from).map(|(b, _)| b).unwrap_or(context.text.len());
        let off = context.text[byte..].find(ev.verb).expect("verb occurs in sentence") + byte;
        let start = context.text[..off].chars().count();
        let end = start + ev.verb.chars().count();
        let mention = EventMention::from_span(&context, crate::schema::CharSpan::new(start, end)).expect("span in bounds");
        from = end;
        located.push((ev, mention));
    }
    ToyContext { context, events: located, before, causes }
}

/// One random multi-event sentence. Names are never replaced by pronouns,
/// so the exact sentence [`HELD_OUT_SENTENCE`] cannot occur.
pub fn toy_context<R: Rng>(rng: &mut R, id: String) -> ToyContext {
    let n = distinct_names(rng, 3);
    let (a, b, c) = (n[0], n[1], n[2]);
    match rng.random_range(0..6) {
        0 => {
            let v = pick_verbs(rng, true, 2, &[]);
            let e = vec![ToyEvent::new(a, v[0], Some(b)), ToyEvent::new(b, v[1], Some(c))];
            build(id, format!("{a} {} {b}, so {b} {} {c}", v[0], v[1]), e, vec![(0, 1)], vec![(0, 1)])
        }
        1 => {
            let v = pick_verbs(rng, true, 2, &[]);
            let e = vec![ToyEvent::new(a, v[0], Some(b)), ToyEvent::new(b, v[1], Some(a))];
            build(id, format!("{a} {} {b} after {b} {} {a}", v[0], v[1]), e, vec![(1, 0)], vec![(1, 0)])
        }
        2 => {
            let v = pick_verbs(rng, true, 1, &[]);
            let iv = pick_verbs(rng, false, 1, &[]);
            let e = vec![ToyEvent::new(a, v[0], Some(b)), ToyEvent::new(b, iv[0], None)];
            build(id, format!("After {a} {} {b}, {b} {}", v[0], iv[0]), e, vec![(0, 1)], vec![(0, 1)])
        }
        3 => {
            let v = pick_verbs(rng, true, 1, &["called"]);
            let e = vec![
                ToyEvent::new(a, v[0], Some(b)),
                ToyEvent::new(b, "didn't reply", None),
                ToyEvent::new(a, "called", Some(b)),
            ];
            let text = format!("{a} {} {b}, so {b} didn't reply when {a} called {b}", v[0]);
            build(id, text, e, vec![(0, 2), (2, 1)], vec![(0, 1)])
        }
        4 => {
            let iv = pick_verbs(rng, false, 1, &["didn't reply"]);
            let v = pick_verbs(rng, true, 1, &[]);
            let e = vec![ToyEvent::new(a, iv[0], None), ToyEvent::new(b, v[0], Some(a))];
            build(id, format!("{a} {} because {b} {} {a}", iv[0], v[0]), e, vec![(1, 0)], vec![(1, 0)])
        }
        _ => {
            let v = pick_verbs(rng, true, 2, &[]);
            let e = vec![ToyEvent::new(a, v[0], Some(b)), ToyEvent::new(b, v[1], Some(c))];
            build(id, format!("{a} {} {b} and then {b} {} {c}", v[0], v[1]), e, vec![(0, 1)], vec![])
        }
    }
}

/// `n` seeded multi-event sentences with ids `toy-0000`, `toy-0001`, ...
pub fn toy_contexts(n: usize, seed: u64) -> Vec<ToyContext> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| toy_context(&mut rng, format!("toy-{i:04}"))).collect()
}

/// Gold records for [`toy_contexts`].
pub fn toy_dataset(n: usize, seed: u64) -> (Vec<ContextSentence>, Vec<InferenceRecord>) {
    let ctxs = toy_contexts(n, seed);
    let records = ctxs.iter().flat_map(ToyContext::gold_records).collect();
    (ctxs.into_iter().map(|c| c.context).collect(), records)
}

/// The held-out sentence and its three target events.
pub fn held_out_sentence() -> (ContextSentence, Vec<EventMention>) {
    let ctx = ContextSentence::new("held-out", HELD_OUT_SENTENCE);
    let events = ["insulted", "didn't reply", "called"]
        .iter()
        .map(|s| EventMention::find(&ctx, s).expect("event in sentence"))
        .collect();
    (ctx, events)
}

/// Recipe for the reference single-event model.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainRecipe {
    pub model: TinyConfig,
    pub train: TrainConfig,
    pub pairs_per_verb: usize,
}

impl Default for PretrainRecipe {
    fn default() -> Self {
        PretrainRecipe {
            model: TinyConfig { hidden: 48, max_positions: 24, seed: 7, init_scale: 0.1 },
            train: TrainConfig {
                epochs: 12,
                batch_size: 32,
                learning_rate: 1e-2,
                weight_decay: 0.0,
                seed: 7,
                ..TrainConfig::default()
            },
            pairs_per_verb: 8,
        }
    }
}

impl PretrainRecipe {
    fn fingerprint(&self) -> u64 {
        fnv1a(format!("{:?}|v{}", self, VERBS.len()).as_bytes())
    }
}

/// Where pretrained models are cached: `$MULTIEVENT_CACHE_DIR`, or a
/// `multievent-cache` directory under the system temp dir.
pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("multievent-cache"))
}

/// Trains the reference model from scratch on the single-event knowledge
/// base.
pub fn pretrain(recipe: &PretrainRecipe) -> Result<TinySeq2Seq> {
    let vocab = vocabulary_texts();
    let mut model = TinySeq2Seq::new(recipe.model, vocab.iter().map(String::as_str));
    let kb = simple_kb(recipe.pairs_per_verb, recipe.train.seed);
    let report = fine_tune(&mut model, &kb, &recipe.train)?;
    info!(
        "pretrained reference model on {} examples, final epoch loss {:.4}",
        kb.len(),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(model)
}

/// The pretrained reference model, loaded from the cache when present and
/// trained (then cached) otherwise.
pub fn reference_model() -> Result<TinySeq2Seq> {
    static MEMO: OnceLock<std::result::Result<PathBuf, String>> = OnceLock::new();
    let recipe = PretrainRecipe::default();
    let dir = MEMO
        .get_or_init(|| {
            let dir = cache_dir().join(format!("reference-{:016x}", recipe.fingerprint()));
            if dir.join("tiny_seq2seq.json").is_file() {
                return Ok(dir);
            }
            let model = pretrain(&recipe).map_err(|e| e.to_string())?;
            // write to a private directory, then move into place
            let tmp = dir.with_extension(format!("tmp{}", std::process::id()));
            model.save(&tmp).map_err(|e| e.to_string())?;
            if std::fs::rename(&tmp, &dir).is_err() {
                let _ = std::fs::remove_dir_all(&tmp);
                if !dir.join("tiny_seq2seq.json").is_file() {
                    return Err(format!("could not populate cache at {}", dir.display()));
                }
            }
            Ok(dir)
        })
        .clone()
        .map_err(Error::data)?;
    Ok(TinySeq2Seq::load(&dir)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::validate_record;

    #[test]
    fn templates_cover_every_relation() {
        for v in &VERBS {
            for pair in &v.templates {
                assert!(pair.iter().all(|t| !t.is_empty()), "{}", v.surface);
                assert_ne!(pair[0], pair[1]);
                if !v.transitive {
                    assert!(pair.iter().all(|t| !t.contains("{O}")), "{}", v.surface);
                }
            }
        }
    }

    #[test]
    fn gold_records_are_valid_and_linked() {
        let ctxs = toy_contexts(60, 3);
        for c in &ctxs {
            assert_ne!(c.context.text, HELD_OUT_SENTENCE);
            let records = c.gold_records();
            assert!(records.len() >= c.events.len() * 12);
            for r in &records {
                assert!(validate_record(r, &c.context).is_empty(), "{r:?}");
            }
        }
        let linked = ctxs.iter().find(|c| !c.causes.is_empty()).unwrap();
        let (a, b) = linked.causes[0];
        let records = linked.gold_records();
        let effect = linked.events[b].0.clause();
        assert!(records.iter().any(|r| r.event == linked.events[a].1 && r.relation == RelationType::Causes && r.inference == effect));
    }

    #[test]
    fn held_out_sentence_events() {
        let (ctx, events) = held_out_sentence();
        let surfaces: Vec<_> = events.iter().map(|e| e.surface.as_str()).collect();
        assert_eq!(surfaces, ["insulted", "didn't reply", "called"]);
        assert_eq!(ctx.text, HELD_OUT_SENTENCE);
    }

    #[test]
    fn simple_kb_is_deterministic() {
        let a = simple_kb(4, 1);
        assert_eq!(a, simple_kb(4, 1));
        assert_eq!(a.len(), (10 * 4 + 4 * 6) * 6 * 2);
        assert!(a.iter().any(|e| e.input == "Mary cried xReason [GEN]" && e.target == "Mary is hurt"));
    }
}
