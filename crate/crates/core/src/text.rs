//! Small text helpers shared across modules.

/// Byte offset of the `char_idx`-th character, or `None` when past the end.
/// `char_idx == char count` maps to `text.len()`.
pub fn char_to_byte(text: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (byte, _) in text.char_indices() {
        if count == char_idx {
            return Some(byte);
        }
        count += 1;
    }
    (count == char_idx).then_some(text.len())
}

/// Character index of a byte offset that lies on a char boundary.
pub fn byte_to_char(text: &str, byte_idx: usize) -> usize {
    text[..byte_idx].chars().count()
}

/// Collapse every whitespace run to a single space and trim both ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalization used for deduplicating generated inferences: lowercase,
/// collapsed whitespace, terminal periods stripped.
pub fn normalize_inference(s: &str) -> String {
    let collapsed = collapse_whitespace(&s.to_lowercase());
    collapsed.trim_end_matches('.').trim_end().to_string()
}

/// 64-bit FNV-1a. Stable across platforms and releases, used for seeding and
/// feature-row initialisation.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Seed for a named stage, derived from the global seed.
pub fn stage_seed(global: u64, stage: &str) -> u64 {
    fnv1a(stage.as_bytes()) ^ global.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}
