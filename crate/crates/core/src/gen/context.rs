//! Context selection for generation experiments: pairs of consecutive
//! sentences, dropped when a capitalized token appears mid-sentence —
//! the crude stand-in for a proper-noun filter.

use super::tokenize::{split_sentences, tokenize};

/// True when any token after the sentence's first starts with an
/// uppercase letter.
fn has_mid_sentence_capital(sentence: &str) -> bool {
    sentence
        .split_whitespace()
        .skip(1)
        .any(|t| t.chars().next().is_some_and(char::is_uppercase))
}

/// All pairs of consecutive sentences from `text`, tokenized and
/// lowercased, skipping pairs where either sentence carries a
/// mid-sentence capitalized token.
pub fn select_contexts(text: &str) -> Vec<Vec<String>> {
    let sentences = split_sentences(text);
    let mut contexts = Vec::new();
    for pair in sentences.windows(2) {
        if pair.iter().any(|s| has_mid_sentence_capital(s)) {
            continue;
        }
        let mut tokens = tokenize(&pair[0]);
        tokens.extend(tokenize(&pair[1]));
        if !tokens.is_empty() {
            contexts.push(tokens);
        }
    }
    contexts
}
