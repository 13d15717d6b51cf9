//! The 204 context features: top mentions, hashtags and words per stream,
//! as TF-IDF scores and embedding coordinates, plus entity count statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusView, TweetRecord};
use crate::embedding::{EmbeddingTable, EMBEDDING_DIM};
use crate::text::{hashtag_key, mention_key, top_k, Tokenizer, STOPWORDS_VERSION};

pub const CONTEXT_DIM: usize = 204;
pub const TOP_K: usize = 3;
const STREAM_DIM: usize = CONTEXT_DIM / 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    Tweet,
    Retweet,
}

impl Stream {
    pub const ALL: [Stream; 2] = [Stream::Tweet, Stream::Retweet];

    pub fn name(self) -> &'static str {
        match self {
            Stream::Tweet => "tweet",
            Stream::Retweet => "retweet",
        }
    }

    pub fn contains(self, t: &TweetRecord) -> bool {
        t.is_retweet() == (self == Stream::Retweet)
    }
}

/// Slot names in extraction order: per stream, the TF-IDF block, the
/// embedding block, then the six count statistics.
pub fn context_names() -> Vec<String> {
    let mut out = Vec::with_capacity(CONTEXT_DIM);
    for s in Stream::ALL {
        let s = s.name();
        for r in 1..=TOP_K {
            out.push(format!("N{r}_{s}_mentioned_tfidf"));
            out.push(format!("N{r}_{s}_hashtags_tfidf"));
        }
        for r in 1..=TOP_K {
            for kind in ["mentioned_word", "hashtags_word", "word"] {
                for d in 0..EMBEDDING_DIM {
                    out.push(format!("N{r}_{s}_{kind}_{d}"));
                }
            }
        }
        for what in ["urls", "hashtags", "mentions"] {
            out.push(format!("{s}_number_of_{what}_avg"));
            out.push(format!("{s}_number_of_{what}_std"));
        }
    }
    out
}

/// Document frequencies for one stream. A document is one user's posts in
/// the stream; users without posts in it contribute no document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamStats {
    pub documents: u64,
    pub mention_df: BTreeMap<String, u64>,
    pub hashtag_df: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub stopwords_version: String,
    pub tweet: StreamStats,
    pub retweet: StreamStats,
}

impl CorpusStats {
    pub fn stream(&self, s: Stream) -> &StreamStats {
        match s {
            Stream::Tweet => &self.tweet,
            Stream::Retweet => &self.retweet,
        }
    }
}

fn lowered(v: &[String]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|s| s.to_lowercase())
}

pub fn fit_corpus_stats(view: &CorpusView) -> CorpusStats {
    let mut stats = CorpusStats {
        stopwords_version: STOPWORDS_VERSION.to_string(),
        tweet: StreamStats::default(),
        retweet: StreamStats::default(),
    };
    for user in view.user_ids() {
        let posts = view.tweets_of(user);
        for s in Stream::ALL {
            let stream: Vec<&TweetRecord> = posts.iter().filter(|t| s.contains(t)).collect();
            if stream.is_empty() {
                continue;
            }
            let dst = match s {
                Stream::Tweet => &mut stats.tweet,
                Stream::Retweet => &mut stats.retweet,
            };
            dst.documents += 1;
            let mentions: BTreeSet<String> = stream.iter().flat_map(|t| lowered(&t.mentions)).collect();
            let hashtags: BTreeSet<String> = stream.iter().flat_map(|t| lowered(&t.hashtags)).collect();
            for m in mentions {
                *dst.mention_df.entry(m).or_default() += 1;
            }
            for h in hashtags {
                *dst.hashtag_df.entry(h).or_default() += 1;
            }
        }
    }
    stats
}

/// `tf · ln((1 + N) / (1 + df))` with raw in-document count `tf`.
pub fn tfidf(tf: usize, df: u64, documents: u64) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    tf as f64 * ((1 + documents) as f64 / (1 + df) as f64).ln()
}

/// Sorted before summing so the result does not depend on post order.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn push_vector(out: &mut Vec<f64>, v: Option<&[f64; EMBEDDING_DIM]>) {
    match v {
        Some(v) => out.extend_from_slice(v),
        None => out.extend(std::iter::repeat_n(f64::NAN, EMBEDDING_DIM)),
    }
}

fn extract_stream(
    posts: &[&TweetRecord],
    stream: &StreamStats,
    embeddings: &EmbeddingTable,
    tokenizer: &Tokenizer,
    out: &mut Vec<f64>,
) {
    if posts.is_empty() {
        out.extend(std::iter::repeat_n(f64::NAN, STREAM_DIM));
        return;
    }
    let mentions: Vec<String> = posts.iter().flat_map(|t| lowered(&t.mentions)).collect();
    let hashtags: Vec<String> = posts.iter().flat_map(|t| lowered(&t.hashtags)).collect();
    let words: Vec<String> = posts.iter().flat_map(|t| tokenizer.tokenize(&t.text)).collect();
    let top_m = top_k(&mentions, TOP_K);
    let top_h = top_k(&hashtags, TOP_K);
    let top_w = top_k(&words, TOP_K);

    let score = |ranked: &[(String, usize)], r: usize, df: &BTreeMap<String, u64>| -> f64 {
        ranked.get(r).map_or(f64::NAN, |(term, tf)| {
            tfidf(*tf, df.get(term).copied().unwrap_or(0), stream.documents)
        })
    };
    for r in 0..TOP_K {
        out.push(score(&top_m, r, &stream.mention_df));
        out.push(score(&top_h, r, &stream.hashtag_df));
    }
    for r in 0..TOP_K {
        push_vector(out, top_m.get(r).and_then(|(m, _)| embeddings.lookup(&mention_key(m))));
        push_vector(out, top_h.get(r).and_then(|(h, _)| embeddings.lookup(&hashtag_key(h))));
        push_vector(out, top_w.get(r).and_then(|(w, _)| embeddings.lookup(w)));
    }
    let counters: [fn(&TweetRecord) -> usize; 3] = [|t| t.urls.len(), |t| t.hashtags.len(), |t| t.mentions.len()];
    for count in counters {
        let values: Vec<f64> = posts.iter().map(|t| count(t) as f64).collect();
        let (m, s) = mean_std(&values);
        out.push(m);
        out.push(s);
    }
}

/// All 204 slots in [`context_names`] order for one user's posts.
pub fn extract_context(
    posts: &[TweetRecord],
    stats: &CorpusStats,
    embeddings: &EmbeddingTable,
    tokenizer: &Tokenizer,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(CONTEXT_DIM);
    for s in Stream::ALL {
        let stream: Vec<&TweetRecord> = posts.iter().filter(|t| s.contains(t)).collect();
        extract_stream(&stream, stats.stream(s), embeddings, tokenizer, &mut out);
    }
    debug_assert_eq!(out.len(), CONTEXT_DIM);
    out
}

/// Training sentences for the embedding model: each post's word tokens
/// followed by its hashtag and mention keys.
pub fn embedding_sentences(view: &CorpusView, tokenizer: &Tokenizer) -> Vec<Vec<String>> {
    view.tweets()
        .map(|t| {
            let mut s = tokenizer.tokenize(&t.text);
            s.extend(t.hashtags.iter().map(|h| hashtag_key(h)));
            s.extend(t.mentions.iter().map(|m| mention_key(m)));
            s
        })
        .filter(|s| !s.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_complete() {
        let names = context_names();
        assert_eq!(names.len(), CONTEXT_DIM);
        assert_eq!(CONTEXT_DIM, 2 * (6 + 90) + 12);
        let set: BTreeSet<&String> = names.iter().collect();
        assert_eq!(set.len(), CONTEXT_DIM);
        assert!(names.contains(&"N1_retweet_hashtags_word_7".to_string()));
        assert!(names.contains(&"tweet_number_of_urls_std".to_string()));
    }

    #[test]
    fn tfidf_examples() {
        assert_eq!(tfidf(0, 1, 3), 0.0);
        assert_eq!(tfidf(5, 3, 3), 0.0);
        assert_eq!(tfidf(2, 1, 1), 0.0);
        assert!((tfidf(2, 1, 3) - 2.0 * 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn population_std() {
        assert_eq!(mean_std(&[2.0, 0.0]), (1.0, 1.0));
    }
}
