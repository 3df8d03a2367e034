//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the metric code under test.

#![allow(dead_code)]

use multievent::schema::{CharSpan, ContextSentence, EventMention, InferenceRecord, Provenance, RelationType};

/// Lowercase; alphanumeric runs are tokens; any other visible character is
/// a token by itself.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
        } else if chars[i].is_alphanumeric() {
            let start = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else {
            out.push(chars[i].to_string());
            i += 1;
        }
    }
    out
}

fn grams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= tokens.len() {
        out.push(tokens[i..i + n].to_vec());
        i += 1;
    }
    out
}

/// Clipped matches by explicit scanning: each candidate gram consumes one
/// unused identical reference gram.
fn clipped_matches(cand: &[Vec<String>], refs: &[Vec<String>]) -> usize {
    let mut used = vec![false; refs.len()];
    let mut m = 0;
    for g in cand {
        for (j, r) in refs.iter().enumerate() {
            if !used[j] && r == g {
                used[j] = true;
                m += 1;
                break;
            }
        }
    }
    m
}

pub fn oracle_bleu(candidate: &str, reference: &str, n: usize) -> f64 {
    let c = oracle_tokens(candidate);
    let r = oracle_tokens(reference);
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let mut product = 1.0f64;
    for k in 1..=n {
        let cg = grams(&c, k);
        let rg = grams(&r, k);
        let m = clipped_matches(&cg, &rg);
        let p = if m > 0 {
            m as f64 / cg.len() as f64
        } else if k == 1 {
            return 0.0;
        } else {
            1.0 / (cg.len() as f64 + 1.0)
        };
        product *= p.powf(1.0 / n as f64);
    }
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    bp * product
}

/// Full dynamic-programming LCS table.
pub fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

pub fn oracle_rouge_l(candidate: &str, reference: &str) -> f64 {
    let c = oracle_tokens(candidate);
    let r = oracle_tokens(reference);
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let l = oracle_lcs(&c, &r) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let prec = l / c.len() as f64;
    let rec = l / r.len() as f64;
    let b2 = 1.2f64 * 1.2;
    (1.0 + b2) * prec * rec / (rec + b2 * prec)
}

/// Candidate/reference pairs covering exact matches, partial overlaps,
/// reorderings, repeated tokens, punctuation, case, very short and empty
/// strings.
pub const METRIC_PAIRS: [(&str, &str); 20] = [
    ("Mary feels hurt", "Mary feels hurt"),
    ("Mary feels hurt", "Mary feels very hurt"),
    ("John is angry at Mary", "John was angry with Mary"),
    ("the phone rings", "Mary's phone rings loudly"),
    ("a b c d", "a c d"),
    ("the the the the", "the cat sat on the mat"),
    ("hurt", "Mary feels hurt"),
    ("Mary feels hurt and sad and alone", "Mary feels hurt"),
    ("she ignores him", "he calls her"),
    ("", "Mary feels hurt"),
    ("Mary feels hurt", ""),
    ("He apologized, then left.", "he apologized and then he left"),
    ("JOHN CALLS MARY", "john calls mary"),
    ("mary hurt feels", "Mary feels hurt"),
    ("to get a phone", "to buy a new phone"),
    ("they argue", "they argue"),
    ("x", "y"),
    ("John didn't reply", "John did not reply"),
    ("one two three four five six", "six five four three two one"),
    ("café au lait", "un café au lait chaud"),
];

/// A synthetic record set: `n` contexts with 1-3 events each and a few
/// inferences per event.
pub fn synthetic_records(n: usize) -> Vec<InferenceRecord> {
    let mut out = Vec::new();
    for i in 0..n {
        let id = format!("ctx{i:04}");
        let text = format!("Person{i} walked home and then cooked dinner while it rained");
        let ctx = ContextSentence::new(id.clone(), text);
        let events = 1 + i % 3;
        for surface in ["walked", "cooked", "rained"].iter().take(events) {
            let event = EventMention::find(&ctx, surface).unwrap();
            for (k, rel) in RelationType::ALL.iter().enumerate().take(1 + (i + k_offset(surface)) % 4) {
                out.push(InferenceRecord {
                    context_id: id.clone(),
                    event: event.clone(),
                    relation: *rel,
                    inference: format!("inference {k} for {surface}"),
                    provenance: Provenance::Human,
                });
            }
        }
    }
    out
}

fn k_offset(s: &str) -> usize {
    s.len()
}

pub fn span(start: usize, end: usize) -> CharSpan {
    CharSpan::new(start, end)
}

/// Path of a file bundled under the crate's `data/` directory.
pub fn data_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

use multievent::modelkit::{NliDistribution, NliLabel, TableEmbedder, TableNli};
use multievent::silverlab::{nli_filter, overlap_filter};

pub enum NliOutcome {
    Dist(f64, f64, f64),
    Fails,
}

pub enum FilterCase {
    /// Candidate vector, references (none = empty set), threshold.
    Overlap { vector: [f32; 4], empty_refs: bool, threshold: f64, keep: bool },
    Nli { relation: RelationType, outcome: NliOutcome, keep: bool },
}

const REF_A: [f32; 4] = [1.0, 0.0, 0.0, 0.0];
const REF_B: [f32; 4] = [0.0, 1.0, 0.0, 0.0];

/// Thirty hand-enumerated filter cases. Cosines are exact in binary
/// floating point (e.g. (7,7,1,1) has norm 10 and cosine 0.7 to each axis).
pub fn filter_table() -> Vec<FilterCase> {
    use FilterCase::*;
    use NliOutcome::*;
    use RelationType::*;
    let o = |v: [f32; 4], threshold: f64, keep: bool| Overlap { vector: v, empty_refs: false, threshold, keep };
    let n = |relation, outcome, keep| Nli { relation, outcome, keep };
    vec![
        o([1.0, 0.0, 0.0, 0.0], 0.7, true),
        o([7.0, 7.0, 1.0, 1.0], 0.7, false),
        o([7.0, 1.0, 7.0, 1.0], 0.7, false),
        o([8.0, 6.0, 0.0, 0.0], 0.7, true),
        o([6.0, 8.0, 0.0, 0.0], 0.7, true),
        o([0.0, 0.0, 1.0, 0.0], 0.7, false),
        o([-1.0, 0.0, 0.0, 0.0], 0.7, false),
        o([1.0, 1.0, 0.0, 0.0], 0.7, true),
        o([2.0, 1.0, 2.0, 0.0], 0.7, false),
        o([8.0, 6.0, 0.0, 0.0], 0.8, false),
        o([8.0, 6.0, 0.0, 0.0], 0.79, true),
        o([0.0, 0.0, 1.0, 0.0], 0.0, false),
        o([1.0, 0.0, 1.0, 0.0], 0.0, true),
        o([1.0, 0.0, 0.0, 0.0], 1.0, false),
        o([7.0, 7.0, 1.0, 1.0], 0.69, true),
        Overlap { vector: [1.0, 0.0, 0.0, 0.0], empty_refs: true, threshold: 0.7, keep: false },
        n(Causes, Dist(1.0, 0.0, 0.0), true),
        n(Causes, Dist(0.0, 1.0, 0.0), false),
        n(Causes, Dist(0.0, 0.0, 1.0), false),
        n(HinderedBy, Dist(0.0, 0.0, 1.0), true),
        n(HinderedBy, Dist(1.0, 0.0, 0.0), false),
        n(HinderedBy, Dist(0.0, 1.0, 0.0), false),
        n(XReason, Dist(0.5, 0.3, 0.2), true),
        n(XReason, Dist(0.4, 0.4, 0.2), false),
        n(HinderedBy, Dist(0.2, 0.4, 0.4), false),
        n(HinderedBy, Dist(0.3, 0.2, 0.5), true),
        n(IsBefore, Fails, false),
        n(HasPrerequisite, Dist(0.45, 0.1, 0.45), true),
        n(HinderedBy, Dist(0.45, 0.1, 0.45), false),
        n(IsAfter, Dist(0.34, 0.33, 0.33), true),
    ]
}

/// Runs one case through the library filter and returns whether the
/// candidate was kept.
pub fn run_filter_case(case: &FilterCase) -> bool {
    match case {
        FilterCase::Overlap { vector, empty_refs, threshold, .. } => {
            let emb = TableEmbedder::new(4).with("cand", vector.to_vec()).with("a", REF_A.to_vec()).with("b", REF_B.to_vec());
            let refs: Vec<String> = if *empty_refs { vec![] } else { vec!["a".into(), "b".into()] };
            overlap_filter(&["cand".to_string()], &refs, &emb, *threshold).unwrap()[0].kept
        }
        FilterCase::Nli { relation, outcome, .. } => {
            let ctx = "John insulted Mary";
            let nli = match outcome {
                NliOutcome::Dist(e, n, c) => {
                    TableNli::new().with(ctx, "cand", NliDistribution::new(*e, *n, *c).unwrap())
                }
                NliOutcome::Fails => TableNli::new().with_failure(ctx, "cand", "offline"),
            };
            nli_filter(ctx, &["cand".to_string()], *relation, &nli)[0].kept
        }
    }
}

pub fn expected_keep(case: &FilterCase) -> bool {
    match case {
        FilterCase::Overlap { keep, .. } | FilterCase::Nli { keep, .. } => *keep,
    }
}

pub fn one_hot(label: NliLabel) -> NliDistribution {
    NliDistribution::one_hot(label)
}
