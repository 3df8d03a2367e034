//! Part-of-speech tagging interface and a dependency-free rule tagger.
//!
//! Event extraction and the fallback clause splitter only need coarse
//! Universal-POS tags. Any tagger that returns `(token, tag, span)` triples can
//! be plugged in through [`PosTagger`]; [`RuleTagger`] is a lexicon-and-suffix
//! tagger that handles plain English narrative text well enough for desk runs.

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::schema::CharSpan;

/// Universal POS tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Upos {
    pub fn is_verbal(self) -> bool {
        matches!(self, Upos::Verb | Upos::Aux)
    }

    pub fn is_nominal(self) -> bool {
        matches!(self, Upos::Noun | Upos::Propn | Upos::Pron | Upos::Num)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub token: String,
    pub tag: Upos,
    /// Character span into the tagged sentence.
    pub span: CharSpan,
}

pub trait PosTagger: Send + Sync {
    fn tag(&self, sentence: &str) -> Result<Vec<TaggedToken>, BackendError>;
}

/// A raw token with its character span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: CharSpan,
}

const CLITICS: [&str; 7] = ["'s", "'re", "'ve", "'ll", "'d", "'m", "n't"];

/// Splits a sentence into word and punctuation tokens, separating English
/// clitics the way treebank tokenizers do (`didn't` → `did`, `n't`).
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let chars: Vec<char> = sentence.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_word_char(c) {
            let start = i;
            while i < chars.len() && (is_word_char(chars[i]) || is_inner_apostrophe(&chars, i)) {
                i += 1;
            }
            split_clitic(&chars, start, i, &mut out);
        } else {
            out.push(Token { text: c.to_string(), span: CharSpan::new(i, i + 1) });
            i += 1;
        }
    }
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_'
}

fn is_inner_apostrophe(chars: &[char], i: usize) -> bool {
    matches!(chars[i], '\'' | '’')
        && i > 0
        && is_word_char(chars[i - 1])
        && chars.get(i + 1).is_some_and(|c| c.is_alphabetic())
}

fn split_clitic(chars: &[char], start: usize, end: usize, out: &mut Vec<Token>) {
    let word: String = chars[start..end].iter().map(|c| if *c == '’' { '\'' } else { *c }).collect();
    let lower = word.to_lowercase();
    for clitic in CLITICS {
        if lower.ends_with(clitic) && lower.len() > clitic.len() {
            let cut = end - clitic.chars().count();
            out.push(Token { text: chars[start..cut].iter().collect(), span: CharSpan::new(start, cut) });
            out.push(Token { text: chars[cut..end].iter().collect(), span: CharSpan::new(cut, end) });
            return;
        }
    }
    out.push(Token { text: chars[start..end].iter().collect(), span: CharSpan::new(start, end) });
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "every", "each", "several",
    "many", "few", "all", "both", "no", "another", "my", "your", "his", "its", "our", "their",
];
const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "myself",
    "yourself", "himself", "herself", "itself", "ourselves", "themselves", "someone", "everyone",
    "nobody", "something", "nothing", "everything", "who", "what", "mine", "yours", "hers", "theirs",
];
const AUXILIARIES: &[&str] = &[
    "am", "is", "are", "was", "were", "be", "been", "being", "do", "does", "did", "have", "has",
    "had", "will", "would", "shall", "should", "can", "could", "may", "might", "must", "ca", "wo",
    "'s", "'re", "'ve", "'ll", "'d", "'m",
];
const ADPOSITIONS: &[&str] = &[
    "in", "on", "at", "to", "from", "with", "by", "for", "of", "into", "onto", "over", "under",
    "about", "after", "before", "during", "through", "near", "across", "against", "between",
    "without", "around", "behind", "toward", "towards", "off", "up", "down", "out",
];
const CCONJ: &[&str] = &["and", "or", "but", "nor", "yet"];
const SCONJ: &[&str] = &[
    "so", "when", "while", "because", "if", "although", "though", "since", "until", "unless",
    "whereas", "as", "once", "whenever", "than",
];
const ADVERBS: &[&str] = &[
    "then", "very", "too", "also", "just", "still", "never", "always", "often", "already", "soon",
    "again", "here", "there", "now", "later", "even", "only", "finally", "suddenly", "quickly",
    "immediately", "away", "back",
];
const NEGATIONS: &[&str] = &["not", "n't", "never"];

/// Base forms and irregular inflections recognised as verbs regardless of suffix.
const VERBS: &[&str] = &[
    "answer", "arrive", "ask", "bake", "borrow", "break", "breathe", "bring", "broke", "brought",
    "buy", "bought", "call", "came", "catch", "caught", "cook", "come", "cry", "cut", "dance",
    "decide", "dive", "do", "drink", "drank", "drive", "drove", "eat", "ate", "fall", "fell",
    "feel", "felt", "fight", "fought", "find", "found", "finish", "forget", "forgot", "get", "got",
    "give", "gave", "go", "went", "gone", "grab", "help", "hit", "hug", "hurt", "ignore", "insult",
    "jump", "keep", "kept", "knock", "know", "knew", "laugh", "leave", "left", "lend", "lent", "lie",
    "lied", "like", "lose", "lost", "make", "made", "meet", "met", "miss", "move", "need", "open", "pay",
    "paid", "play", "promise", "put", "read", "reply", "respond", "ran", "run", "said", "say",
    "saw", "see", "sell", "sold", "send", "sent", "set", "shoot", "shot", "shout", "sing", "sang",
    "sit", "sat", "sleep", "slept", "smile", "soak", "speak", "spoke", "spend", "spent", "stand",
    "stood", "start", "stay", "steal", "stole", "stop", "swim", "swam", "take", "took", "talk",
    "taught", "teach", "tell", "thank", "think", "thought", "told", "trim", "try", "understand",
    "understood", "visit", "wait", "walk", "want", "watch", "win", "won", "work", "write", "wrote",
    "yell",
];

/// Words ending in verb-like suffixes that are not verbs.
const NOT_VERBS: &[&str] = &[
    "bed", "red", "seed", "speed", "feed", "hundred", "bread", "shed", "sled", "wed",
    "thing", "king", "ring", "morning", "evening", "nothing", "something", "everything", "anything",
    "spring", "string", "wing", "building", "meeting", "wedding", "ceiling", "feeling", "during",
];

/// Lexicon-and-suffix tagger. Deterministic and dependency-free; accuracy is
/// adequate for simple narrative sentences, not for general parsing.
#[derive(Debug, Clone, Default)]
pub struct RuleTagger;

impl RuleTagger {
    fn tag_tokens(&self, tokens: &[Token]) -> Vec<Upos> {
        let mut tags: Vec<Upos> = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            let lower = tok.text.to_lowercase();
            let prev = tags.last().copied();
            let first_char = tok.text.chars().next().unwrap_or(' ');
            let tag = if !first_char.is_alphanumeric() {
                if tok.text.starts_with('\'') && AUXILIARIES.contains(&lower.as_str()) {
                    Upos::Aux
                } else {
                    Upos::Punct
                }
            } else if first_char.is_ascii_digit() {
                Upos::Num
            } else if NEGATIONS.contains(&lower.as_str()) {
                Upos::Part
            } else if lower == "to" && next_is_verb_base(tokens, i) {
                Upos::Part
            } else if AUXILIARIES.contains(&lower.as_str()) {
                if next_is_verbal(tokens, i) { Upos::Aux } else { Upos::Verb }
            } else if PRONOUNS.contains(&lower.as_str()) {
                Upos::Pron
            } else if DETERMINERS.contains(&lower.as_str()) {
                Upos::Det
            } else if CCONJ.contains(&lower.as_str()) {
                Upos::Cconj
            } else if SCONJ.contains(&lower.as_str()) {
                Upos::Sconj
            } else if ADPOSITIONS.contains(&lower.as_str()) {
                Upos::Adp
            } else if ADVERBS.contains(&lower.as_str())
                || (lower.ends_with("ly") && lower.len() > 4 && !verb_lemma_known(&lower))
            {
                Upos::Adv
            } else if first_char.is_uppercase() && i > 0 && !is_sentence_start(&tags) {
                Upos::Propn
            } else if looks_like_verb(&lower, prev) {
                Upos::Verb
            } else if first_char.is_uppercase() && i == 0 && !VERBS.contains(&lower.as_str()) {
                Upos::Propn
            } else {
                Upos::Noun
            };
            tags.push(tag);
        }
        tags
    }
}

fn is_sentence_start(tags: &[Upos]) -> bool {
    tags.is_empty()
}

fn verb_lemma_known(lower: &str) -> bool {
    VERBS.contains(&lower) || VERBS.contains(&lemmatize(lower).as_str())
}

fn next_is_verb_base(tokens: &[Token], i: usize) -> bool {
    tokens.get(i + 1).is_some_and(|t| VERBS.contains(&t.text.to_lowercase().as_str()))
}

fn next_is_verbal(tokens: &[Token], i: usize) -> bool {
    let mut j = i + 1;
    while let Some(t) = tokens.get(j) {
        let lower = t.text.to_lowercase();
        if NEGATIONS.contains(&lower.as_str()) {
            j += 1;
            continue;
        }
        return verb_lemma_known(&lower)
            || (lower.len() > 4 && (lower.ends_with("ed") || lower.ends_with("ing")) && !NOT_VERBS.contains(&lower.as_str()));
    }
    false
}

fn looks_like_verb(lower: &str, prev: Option<Upos>) -> bool {
    if NOT_VERBS.contains(&lower) {
        return false;
    }
    if VERBS.contains(&lower) {
        // bare forms after a determiner or preposition are nouns ("a call", "for help")
        return !matches!(prev, Some(Upos::Det | Upos::Adj | Upos::Adp));
    }
    let suffixed = lower.len() > 4 && (lower.ends_with("ed") || lower.ends_with("ing"));
    if suffixed {
        return !matches!(prev, Some(Upos::Det));
    }
    // third-person forms of known verbs after a subject
    lower.ends_with('s')
        && matches!(prev, Some(Upos::Pron | Upos::Propn | Upos::Noun))
        && VERBS.contains(&lemmatize(lower).as_str())
}

impl PosTagger for RuleTagger {
    fn tag(&self, sentence: &str) -> Result<Vec<TaggedToken>, BackendError> {
        let tokens = tokenize(sentence);
        let tags = self.tag_tokens(&tokens);
        Ok(tokens
            .into_iter()
            .zip(tags)
            .map(|(t, tag)| TaggedToken { token: t.text, tag, span: t.span })
            .collect())
    }
}

const IRREGULAR: &[(&str, &str)] = &[
    ("am", "be"), ("is", "be"), ("are", "be"), ("was", "be"), ("were", "be"), ("been", "be"),
    ("being", "be"), ("'s", "be"), ("'re", "be"), ("'m", "be"), ("did", "do"), ("does", "do"),
    ("done", "do"), ("has", "have"), ("had", "have"), ("'ve", "have"), ("n't", "not"),
    ("ca", "can"), ("wo", "will"), ("'ll", "will"), ("went", "go"), ("gone", "go"), ("ran", "run"),
    ("spent", "spend"), ("took", "take"), ("taken", "take"), ("stood", "stand"), ("got", "get"),
    ("said", "say"), ("made", "make"), ("came", "come"), ("saw", "see"), ("seen", "see"),
    ("felt", "feel"), ("left", "leave"), ("kept", "keep"), ("told", "tell"), ("shot", "shoot"),
    ("slept", "sleep"), ("gave", "give"), ("given", "give"), ("bought", "buy"), ("brought", "bring"),
    ("thought", "think"), ("taught", "teach"), ("caught", "catch"), ("fought", "fight"),
    ("found", "find"), ("knew", "know"), ("known", "know"), ("met", "meet"), ("lost", "lose"),
    ("paid", "pay"), ("sold", "sell"), ("sent", "send"), ("spoke", "speak"), ("stole", "steal"),
    ("swam", "swim"), ("sang", "sing"), ("sat", "sit"), ("won", "win"), ("wrote", "write"),
    ("ate", "eat"), ("drank", "drink"), ("drove", "drive"), ("fell", "fall"), ("forgot", "forget"),
    ("broke", "break"), ("lent", "lend"), ("understood", "understand"), ("lied", "lie"),
    ("cried", "cry"), ("tried", "try"), ("replied", "reply"), ("children", "child"),
    ("people", "person"), ("men", "man"), ("women", "woman"),
];

/// Rule-based lemmatizer: irregular table plus inflectional suffix stripping.
/// Only needs to be consistent, since lemmas are compared with each other.
pub fn lemmatize(word: &str) -> String {
    let lower = word.to_lowercase();
    if let Some((_, lemma)) = IRREGULAR.iter().find(|(form, _)| *form == lower) {
        return lemma.to_string();
    }
    let n = lower.len();
    if !lower.is_ascii() || n <= 3 {
        return lower;
    }
    if let Some(stem) = lower.strip_suffix("ied") {
        return format!("{stem}y");
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = lower.strip_suffix(suffix) {
            if stem.len() < 2 {
                break;
            }
            let b = stem.as_bytes();
            // stopped → stop, hugged → hug
            if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] && !matches!(b[b.len() - 1], b'l' | b's' | b'z') {
                return stem[..stem.len() - 1].to_string();
            }
            if VERBS.contains(&stem) {
                return stem.to_string();
            }
            let with_e = format!("{stem}e");
            if VERBS.contains(&with_e.as_str()) {
                return with_e;
            }
            return stem.to_string();
        }
    }
    if let Some(stem) = lower.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if lower.ends_with("ss") || lower.ends_with("us") {
        return lower;
    }
    if let Some(stem) = lower.strip_suffix("es") {
        if stem.ends_with("sh") || stem.ends_with("ch") || stem.ends_with('x') {
            return stem.to_string();
        }
    }
    if let Some(stem) = lower.strip_suffix('s') {
        return stem.to_string();
    }
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(s: &str) -> Vec<(String, Upos)> {
        RuleTagger.tag(s).unwrap().into_iter().map(|t| (t.token, t.tag)).collect()
    }

    #[test]
    fn clitics_are_split_with_char_spans() {
        let toks = tokenize("she didn't reply.");
        let texts: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["she", "did", "n't", "reply", "."]);
        assert_eq!(toks[1].span, CharSpan::new(4, 7));
        assert_eq!(toks[2].span, CharSpan::new(7, 10));
    }

    #[test]
    fn held_out_sentence_tags() {
        let t = tags("John insulted Mary, so she didn't reply when he called her");
        let verbal: Vec<_> = t.iter().filter(|(_, g)| g.is_verbal()).map(|(w, _)| w.as_str()).collect();
        assert_eq!(verbal, ["insulted", "did", "reply", "called"]);
        assert_eq!(t[0].1, Upos::Propn);
        assert_eq!(t[2].1, Upos::Propn);
        assert_eq!(t[7].1, Upos::Part);
    }

    #[test]
    fn passive_and_coordination() {
        let t = tags("Bryant Dalton was shot and spent several weeks at a medical facility.");
        let get = |w: &str| t.iter().find(|(x, _)| x == w).unwrap().1;
        assert_eq!(get("was"), Upos::Aux);
        assert_eq!(get("shot"), Upos::Verb);
        assert_eq!(get("and"), Upos::Cconj);
        assert_eq!(get("spent"), Upos::Verb);
        assert_eq!(get("weeks"), Upos::Noun);
    }

    #[test]
    fn nouns_after_determiners() {
        let t = tags("The tall tree.");
        assert!(t.iter().all(|(_, g)| !g.is_verbal()));
        let t = tags("He made a call");
        assert_eq!(t[3].1, Upos::Noun);
    }

    #[test]
    fn lemmas() {
        assert_eq!(lemmatize("insulted"), "insult");
        assert_eq!(lemmatize("called"), "call");
        assert_eq!(lemmatize("hugged"), "hug");
        assert_eq!(lemmatize("n't"), "not");
        assert_eq!(lemmatize("spent"), "spend");
        assert_eq!(lemmatize("replied"), "reply");
        assert_eq!(lemmatize("replies"), "reply");
        assert_eq!(lemmatize("taking"), "take");
    }
}
