//! Corpus tokenization: lowercase word tokens, plus the cased sentence
//! split the proper-noun filter works from.

/// Split text into lowercase word tokens: maximal runs of alphanumeric
/// characters and internal apostrophes. Punctuation is dropped; quoting
/// apostrophes are trimmed so `'cat'` and `cat` are the same token.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\'').to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Split text into sentences on `.`, `!` and `?`, preserving the
/// original casing — capitalization is the signal the proper-noun
/// filter reads.
pub fn split_sentences(text: &str) -> Vec<String> {
    text.split(['.', '!', '?'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}
