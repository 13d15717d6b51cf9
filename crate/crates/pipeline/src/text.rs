//! Tokenizer, stopwords and frequency ranking shared by the text features.

use std::collections::{BTreeMap, BTreeSet};

pub const STOPWORDS_VERSION: &str = "en-1";

/// Fixed English stopword list, plus the retweet marker and the HTML
/// ampersand residue common in crawled text.
pub const STOPWORDS_EN: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "amp", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could", "did", "do",
    "does", "doing", "don", "down", "during", "each", "few", "for", "from", "further", "had", "has", "have",
    "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is",
    "it", "its", "itself", "just", "ll", "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of",
    "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "re", "rt", "s",
    "same", "she", "should", "so", "some", "such", "t", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too", "under", "until", "up",
    "ve", "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
    "with", "would", "you", "your", "yours", "yourself", "yourselves",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    stopwords: BTreeSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::with_stopwords(STOPWORDS_EN.iter().copied())
    }
}

impl Tokenizer {
    pub fn with_stopwords<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            stopwords: words.into_iter().map(str::to_lowercase).collect(),
        }
    }

    /// Lowercased word tokens of `text`. Whitespace-separated pieces that
    /// look like hashtags, mentions or links are skipped (those come from the
    /// record's entity lists); the rest is split on non-alphanumeric
    /// characters and stopwords are removed.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for piece in text.split_whitespace() {
            let lower = piece.to_lowercase();
            if lower.starts_with('#') || lower.starts_with('@') || lower.starts_with("http") {
                continue;
            }
            for tok in lower.split(|c: char| !c.is_alphanumeric()) {
                if !tok.is_empty() && !self.stopwords.contains(tok) {
                    out.push(tok.to_string());
                }
            }
        }
        out
    }
}

/// The `k` most frequent terms, ties broken by ascending term.
pub fn top_k<S: AsRef<str>>(terms: &[S], k: usize) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in terms {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    // BTreeMap order is lexicographic; a stable sort by count keeps it for ties
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    ranked.into_iter().take(k).map(|(t, c)| (t.to_string(), c)).collect()
}

/// Embedding vocabulary key for a hashtag.
pub fn hashtag_key(tag: &str) -> String {
    format!("#{}", tag.to_lowercase())
}

/// Embedding vocabulary key for a mentioned screen name.
pub fn mention_key(screen_name: &str) -> String {
    format!("@{}", screen_name.to_lowercase())
}
