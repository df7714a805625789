//! Keyword normalization shared by the text metrics and the text reward.

use std::collections::BTreeSet;

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2026}' | '\u{2013}' | '\u{2014}' | '\u{00AB}' | '\u{00BB}'
        )
}

/// Case-folded whitespace tokens with edge punctuation stripped; tokens that
/// are pure punctuation disappear.
pub fn normalized_tokens(s: &str) -> Vec<String> {
    s.split_whitespace()
        .map(|tok| tok.trim_matches(is_punct).to_lowercase())
        .filter(|tok| !tok.is_empty())
        .collect()
}

pub fn token_set(s: &str) -> BTreeSet<String> {
    normalized_tokens(s).into_iter().collect()
}

/// Normalized form used for exact-match comparison.
pub fn normalize(s: &str) -> String {
    normalized_tokens(s).join(" ")
}

/// Comma-separated keyword phrases, each normalized; empty phrases dropped.
pub fn keyword_phrases(s: &str) -> BTreeSet<String> {
    s.split(',').map(normalize).filter(|p| !p.is_empty()).collect()
}
