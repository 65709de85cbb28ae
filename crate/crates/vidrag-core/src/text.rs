//! Tokenization helpers shared by the mock backends.

/// Lowercase a string and split it into alphanumeric tokens.
pub(crate) fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// FNV-1a over a seed and a token. Stable across platforms and releases,
/// unlike `DefaultHasher`, so seeded mock vectors never drift.
pub(crate) fn stable_hash64(seed: u64, token: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for byte in seed.to_le_bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(PRIME);
    }
    for byte in token.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Words stripped when a question is reduced to its content terms.
pub(crate) const STOPWORDS: &[&str] = &[
    "a", "an", "about", "am", "are", "at", "be", "been", "can", "could", "did", "do", "does",
    "for", "from", "how", "in", "is", "it", "may", "might", "must", "of", "on", "shall", "should",
    "that", "the", "this", "to", "was", "were", "what", "when", "where", "which", "who", "whom",
    "whose", "why", "will", "would",
];

pub(crate) fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}
