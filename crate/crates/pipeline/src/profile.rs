//! The 26 profile features computed from a user object.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AccountRecord, Timestamp, TweetRecord};

pub const PROFILE_DIM: usize = 26;

pub const PROFILE_NAMES: [&str; PROFILE_DIM] = [
    "statuses_count",
    "entities_count",
    "followers_count",
    "friends_count",
    "favourites_count",
    "listed_count",
    "name_len",
    "geolocation",
    "protected",
    "location",
    "background_img",
    "default_profile",
    "verified",
    "screen_name_len",
    "description_len",
    "screen_name_likelihood",
    "name_screen_sim",
    "tweet_retweet_ratio",
    "name_digits",
    "screen_name_digits",
    "tweets_by_age",
    "followers_by_age",
    "friends_by_age",
    "favourites_by_age",
    "listed_by_age",
    "followers_friends",
];

/// Slots introduced by this feature set; the other 20 form the classic
/// statistical baseline.
pub const NEW_PROFILE_FEATURES: [&str; 6] = [
    "entities_count",
    "geolocation",
    "protected",
    "location",
    "name_screen_sim",
    "tweet_retweet_ratio",
];

/// Indices of the 20 baseline slots, in slot order.
pub fn baseline_indices() -> Vec<usize> {
    (0..PROFILE_DIM)
        .filter(|&i| !NEW_PROFILE_FEATURES.contains(&PROFILE_NAMES[i]))
        .collect()
}

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("bigram table must be {expected}x{expected}, got {rows} rows")]
    TableShape { expected: usize, rows: usize },
    #[error("bigram row {0} is not a probability distribution")]
    NotDistribution(usize),
}

/// |S ∩ T| / |S ∪ T| over lowercased character sets; 1 when both are empty.
pub fn jaccard_name_similarity(name: &str, screen_name: &str) -> f64 {
    let s: BTreeSet<char> = name.to_lowercase().chars().collect();
    let t: BTreeSet<char> = screen_name.to_lowercase().chars().collect();
    let union = s.union(&t).count();
    if union == 0 {
        return 1.0;
    }
    s.intersection(&t).count() as f64 / union as f64
}

/// Character bigram model over a fixed alphabet plus one unknown symbol.
/// Row `a` holds `P(next | a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigramModel {
    alphabet: Vec<char>,
    probs: Vec<Vec<f64>>,
}

impl BigramModel {
    fn symbols(&self) -> usize {
        self.alphabet.len() + 1
    }

    fn index(&self, c: char) -> usize {
        self.alphabet.binary_search(&c).unwrap_or(self.alphabet.len())
    }

    /// Uniform over `alphabet` and the unknown symbol.
    pub fn uniform(alphabet: impl IntoIterator<Item = char>) -> Self {
        let alphabet: Vec<char> = alphabet.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let v = alphabet.len() + 1;
        Self {
            probs: vec![vec![1.0 / v as f64; v]; v],
            alphabet,
        }
    }

    /// Explicit table; `rows` covers the sorted alphabet followed by the
    /// unknown symbol.
    pub fn from_rows(alphabet: Vec<char>, rows: Vec<Vec<f64>>) -> Result<Self, ProfileError> {
        let mut model = Self::uniform(alphabet);
        let v = model.symbols();
        if rows.len() != v || rows.iter().any(|r| r.len() != v) {
            return Err(ProfileError::TableShape {
                expected: v,
                rows: rows.len(),
            });
        }
        for (i, r) in rows.iter().enumerate() {
            let sum: f64 = r.iter().sum();
            if r.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(ProfileError::NotDistribution(i));
            }
        }
        model.probs = rows;
        Ok(model)
    }

    /// Add-one smoothed transition estimates from lowercased screen names.
    pub fn fit<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let names: Vec<Vec<char>> = names.into_iter().map(|n| n.to_lowercase().chars().collect()).collect();
        let mut model = Self::uniform(names.iter().flatten().copied());
        let v = model.symbols();
        let mut counts = vec![vec![0u64; v]; v];
        for n in &names {
            for w in n.windows(2) {
                counts[model.index(w[0])][model.index(w[1])] += 1;
            }
        }
        for (row, c) in model.probs.iter_mut().zip(&counts) {
            let total: u64 = c.iter().sum();
            for (p, &k) in row.iter_mut().zip(c) {
                *p = (k + 1) as f64 / (total + v as u64) as f64;
            }
        }
        model
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    /// Geometric mean of the successive bigram probabilities of the
    /// lowercased name; 1 for names shorter than two characters.
    pub fn likelihood(&self, screen_name: &str) -> f64 {
        let idx: Vec<usize> = screen_name.to_lowercase().chars().map(|c| self.index(c)).collect();
        if idx.len() < 2 {
            return 1.0;
        }
        let log_sum: f64 = idx.windows(2).map(|w| self.probs[w[0]][w[1]].ln()).sum();
        (log_sum / (idx.len() - 1) as f64).exp()
    }
}

pub fn screen_name_likelihood(screen_name: &str, model: &BigramModel) -> f64 {
    model.likelihood(screen_name)
}

/// Account age in days, at least one.
pub fn account_age_days(created_at: Timestamp, reference_date: Timestamp) -> f64 {
    let secs = (reference_date - created_at).num_seconds() as f64;
    (secs / SECONDS_PER_DAY).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFeatures {
    pub tweets_by_age: f64,
    pub followers_by_age: f64,
    pub friends_by_age: f64,
    pub favourites_by_age: f64,
    pub listed_by_age: f64,
    pub followers_friends: f64,
}

pub fn rate_features(account: &AccountRecord, reference_date: Timestamp) -> RateFeatures {
    let age = account_age_days(account.created_at, reference_date);
    RateFeatures {
        tweets_by_age: account.statuses_count as f64 / age,
        followers_by_age: account.followers_count as f64 / age,
        friends_by_age: account.friends_count as f64 / age,
        favourites_by_age: account.favourites_count as f64 / age,
        listed_by_age: account.listed_count as f64 / age,
        followers_friends: account.followers_count as f64 / account.friends_count.max(1) as f64,
    }
}

pub fn tweet_retweet_ratio(statuses_count: u64, observed_retweets: u64) -> f64 {
    statuses_count as f64 / observed_retweets.max(1) as f64
}

fn digits(s: &str) -> f64 {
    s.chars().filter(char::is_ascii_digit).count() as f64
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// All 26 slots in [`PROFILE_NAMES`] order. `window_tweets` are the user's
/// posts in the current window, used for the observed retweet count.
pub fn extract_profile(
    account: &AccountRecord,
    window_tweets: &[TweetRecord],
    model: &BigramModel,
    reference_date: Timestamp,
) -> [f64; PROFILE_DIM] {
    let rates = rate_features(account, reference_date);
    let retweets = window_tweets.iter().filter(|t| t.is_retweet()).count() as u64;
    [
        account.statuses_count as f64,
        account.description_entities.len() as f64,
        account.followers_count as f64,
        account.friends_count as f64,
        account.favourites_count as f64,
        account.listed_count as f64,
        account.name.chars().count() as f64,
        flag(account.has_geolocation),
        flag(account.protected),
        flag(account.has_location()),
        flag(account.has_background_image),
        flag(account.default_profile),
        flag(account.verified),
        account.screen_name.chars().count() as f64,
        account.description.chars().count() as f64,
        model.likelihood(&account.screen_name),
        jaccard_name_similarity(&account.name, &account.screen_name),
        tweet_retweet_ratio(account.statuses_count, retweets),
        digits(&account.name),
        digits(&account.screen_name),
        rates.tweets_by_age,
        rates.followers_by_age,
        rates.friends_by_age,
        rates.favourites_by_age,
        rates.listed_by_age,
        rates.followers_friends,
    ]
}

/// Slot lookup by name, for tests and reports.
pub fn slot_map() -> BTreeMap<&'static str, usize> {
    PROFILE_NAMES.iter().enumerate().map(|(i, n)| (*n, i)).collect()
}
