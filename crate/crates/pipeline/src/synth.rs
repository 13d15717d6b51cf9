//! Seeded synthetic corpora with separable bot and human behaviour.
//!
//! Bots post at a fixed interval, follow aggressively, carry digits in their
//! handles, push a small set of campaign hashtags and retweet within
//! seconds. Humans post at diurnal hours with varied text and retweet hours
//! later. The generator also produces scorer outputs and suspensions shaped
//! like the ones a real labeling run would return.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, TimeZone, Utc};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AccountRecord, CorpusError, CorpusView, DescriptionEntity, EntityKind, RetweetRef, Timestamp, TweetRecord, Window};
use crate::labelfusion::{ScorerId, ScorerOutput};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_bots: usize,
    pub n_humans: usize,
    pub start: Timestamp,
    /// Length of the corpus; split it at `start + days/2` for two windows.
    pub days: i64,
    /// Bot posting interval bounds, in hours.
    pub bot_interval_hours: (f64, f64),
    /// Human posting rate bounds, posts per day.
    pub human_rate: (f64, f64),
    /// Share of bots the scorers disagree on.
    pub ambiguous_bots: f64,
    /// Share of bots that are suspended by the time scorer B runs.
    pub suspended_bots: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_bots: 60,
            n_humans: 140,
            start: Utc.with_ymd_and_hms(2020, 9, 1, 0, 0, 0).unwrap(),
            days: 60,
            bot_interval_hours: (4.0, 12.0),
            human_rate: (0.3, 2.5),
            ambiguous_bots: 0.1,
            suspended_bots: 0.1,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn end(&self) -> Timestamp {
        self.start + Duration::days(self.days)
    }

    /// Midpoint of the corpus window.
    pub fn boundary(&self) -> Timestamp {
        self.start + Duration::days(self.days / 2)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub view: CorpusView,
    /// 1 for bots, 0 for humans.
    pub truth: BTreeMap<String, u8>,
    pub scores: Vec<ScorerOutput>,
    pub suspended: BTreeSet<String>,
}

const FIRST: [&str; 16] = [
    "anna", "ben", "clara", "david", "elena", "felix", "grace", "hugo", "iris", "jonas", "karen", "leo", "maria", "nils",
    "olga", "paul",
];
const LAST: [&str; 12] = [
    "smith", "berg", "lopez", "novak", "meyer", "rossi", "kim", "silva", "jensen", "moreau", "costa", "walsh",
];
const WORDS: [&str; 48] = [
    "coffee", "morning", "train", "late", "again", "weekend", "garden", "rain", "sunny", "book", "reading", "kids",
    "school", "dinner", "pasta", "recipe", "match", "goal", "season", "coach", "concert", "band", "album", "guitar",
    "work", "meeting", "project", "deadline", "holiday", "beach", "mountain", "hiking", "photo", "camera", "city",
    "bridge", "market", "bread", "cheese", "friends", "birthday", "party", "movie", "series", "episode", "cat", "dog",
    "walk",
];
const HUMAN_TAGS: [&str; 12] = [
    "photography", "football", "music", "books", "cooking", "travel", "weekend", "cats", "dogs", "hiking", "coffee",
    "movies",
];
const CAMPAIGN_TAGS: [&str; 4] = ["bigsale", "freecoins", "winnow", "clickhere"];
const CAMPAIGN_TEXT: [&str; 3] = ["limited offer do not miss", "claim your reward now", "best deal today only"];
const SYLLABLES: [&str; 8] = ["zor", "qua", "vex", "mip", "tal", "kro", "dex", "nul"];

/// Diurnal weights over UTC hours: quiet at night, busiest in the evening.
const HOUR_WEIGHTS: [f64; 24] = [
    1.0, 0.5, 0.3, 0.2, 0.2, 0.3, 1.0, 2.0, 3.0, 3.0, 3.0, 3.5, 4.0, 3.5, 3.0, 3.0, 3.5, 4.0, 5.0, 6.0, 6.0, 5.0, 3.5, 2.0,
];

const HUB_ACCOUNTS: u64 = 3;
const NEWS_ACCOUNTS: u64 = 8;

struct Ids(u64);

impl Ids {
    fn next(&mut self) -> String {
        self.0 += 1;
        self.0.to_string()
    }
}

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn bot_account<R: Rng>(rng: &mut R, user_id: String, start: Timestamp, index: usize) -> AccountRecord {
    let age_days = rng.gen_range(20..200);
    let handle = format!("{}{}{}", pick(rng, &SYLLABLES), pick(rng, &SYLLABLES), rng.gen_range(100_000..99_999_999u64));
    let tag = pick(rng, &CAMPAIGN_TAGS);
    AccountRecord {
        user_id,
        name: format!("Deals {index}"),
        screen_name: handle,
        description: format!("best offers #{tag} http://promo.example/{index}"),
        created_at: start - Duration::days(age_days) - Duration::seconds(rng.gen_range(0..86_400)),
        statuses_count: rng.gen_range(5_000..60_000),
        followers_count: rng.gen_range(0..150),
        friends_count: rng.gen_range(1_500..5_000),
        favourites_count: rng.gen_range(0..50),
        listed_count: rng.gen_range(0..3),
        verified: false,
        protected: false,
        default_profile: rng.gen_bool(0.9),
        has_background_image: rng.gen_bool(0.1),
        has_geolocation: false,
        location: String::new(),
        description_entities: vec![
            DescriptionEntity {
                kind: EntityKind::Hashtag,
                text: tag.to_string(),
            },
            DescriptionEntity {
                kind: EntityKind::Url,
                text: format!("http://promo.example/{index}"),
            },
        ],
    }
}

fn human_account<R: Rng>(rng: &mut R, user_id: String, start: Timestamp) -> AccountRecord {
    let first = pick(rng, &FIRST);
    let last = pick(rng, &LAST);
    let handle = if rng.gen_bool(0.5) {
        format!("{first}_{last}")
    } else {
        format!("{first}{last}")
    };
    let cap = |s: &str| s[..1].to_uppercase() + &s[1..];
    let topics = [pick(rng, &HUMAN_TAGS), pick(rng, &HUMAN_TAGS)];
    AccountRecord {
        user_id,
        name: format!("{} {}", cap(first), cap(last)),
        screen_name: handle,
        description: format!("into {} and {}", topics[0], topics[1]),
        created_at: start - Duration::days(rng.gen_range(400..4_000)) - Duration::seconds(rng.gen_range(0..86_400)),
        statuses_count: rng.gen_range(200..15_000),
        followers_count: rng.gen_range(30..3_000),
        friends_count: rng.gen_range(30..900),
        favourites_count: rng.gen_range(100..20_000),
        listed_count: rng.gen_range(0..40),
        verified: rng.gen_bool(0.03),
        protected: rng.gen_bool(0.05),
        default_profile: rng.gen_bool(0.2),
        has_background_image: rng.gen_bool(0.8),
        has_geolocation: rng.gen_bool(0.4),
        location: if rng.gen_bool(0.7) { pick(rng, &["Lisbon", "Oslo", "Leeds", "Lyon", "Graz"]).to_string() } else { String::new() },
        description_entities: Vec::new(),
    }
}

/// Generates accounts, posts, scores and suspensions. Deterministic in the
/// config.
pub fn generate(config: &SynthConfig) -> Result<SyntheticCorpus, CorpusError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = config.start;
    let end = config.end();
    let total_secs = (end - start).num_seconds();
    let mut user_ids = Ids(1_000_000);
    let mut tweet_ids = Ids(5_000_000_000);

    let mut accounts = Vec::new();
    let mut truth = BTreeMap::new();
    let mut order: Vec<bool> = std::iter::repeat_n(true, config.n_bots)
        .chain(std::iter::repeat_n(false, config.n_humans))
        .collect();
    order.shuffle(&mut rng);
    for (i, &is_bot) in order.iter().enumerate() {
        let id = user_ids.next();
        let account = if is_bot {
            bot_account(&mut rng, id.clone(), start, i)
        } else {
            human_account(&mut rng, id.clone(), start)
        };
        truth.insert(id, u8::from(is_bot));
        accounts.push(account);
    }
    let human_handles: Vec<String> = accounts
        .iter()
        .filter(|a| truth[&a.user_id] == 0)
        .map(|a| a.screen_name.clone())
        .collect();
    let hub_id = |k: u64| (9_000_000 + k).to_string();
    let news_id = |k: u64| (9_100_000 + k).to_string();
    let hours = WeightedIndex::new(HOUR_WEIGHTS).expect("positive weights");

    let mut tweets = Vec::new();
    for a in &accounts {
        if truth[&a.user_id] == 1 {
            let (lo, hi) = config.bot_interval_hours;
            let period = (rng.gen_range(lo..hi) * 3600.0) as i64;
            let mut offset = rng.gen_range(0..period);
            let campaign = rng.gen_range(0..CAMPAIGN_TAGS.len());
            while offset < total_secs {
                let at = start + Duration::seconds(offset);
                let tag = CAMPAIGN_TAGS[(campaign + rng.gen_range(0..2)) % CAMPAIGN_TAGS.len()];
                let retweet = rng.gen_bool(0.7).then(|| RetweetRef {
                    tweet_id: tweet_ids.next(),
                    author_id: hub_id(rng.gen_range(0..HUB_ACCOUNTS)),
                    created_at: at - Duration::seconds(rng.gen_range(2..90)),
                });
                tweets.push(TweetRecord {
                    tweet_id: tweet_ids.next(),
                    author_id: a.user_id.clone(),
                    created_at: at,
                    text: format!("{} #{tag}", pick(&mut rng, &CAMPAIGN_TEXT)),
                    hashtags: vec![tag.to_string()],
                    mentions: Vec::new(),
                    urls: vec![format!("http://promo.example/{}", rng.gen_range(0..20))],
                    retweet,
                });
                offset += period;
            }
        } else {
            let (lo, hi) = config.human_rate;
            let rate = rng.gen_range(lo..hi);
            let retweet_share = rng.gen_range(0.1..0.5);
            for day in 0..config.days {
                // Bernoulli trials at a tenth of the rate give a Poisson-like count.
                let n = (0..10).filter(|_| rng.gen_bool((rate / 10.0).min(1.0))).count();
                for _ in 0..n {
                    let hour = hours.sample(&mut rng) as i64;
                    let at = start + Duration::seconds(day * 86_400 + hour * 3600 + rng.gen_range(0..3600));
                    if at > end {
                        continue;
                    }
                    let n_words = rng.gen_range(4..12);
                    let text: Vec<&str> = (0..n_words).map(|_| pick(&mut rng, &WORDS)).collect();
                    let hashtags: Vec<String> = (0..rng.gen_range(0..3)).map(|_| pick(&mut rng, &HUMAN_TAGS).to_string()).collect();
                    let mentions: Vec<String> = (0..rng.gen_range(0..2))
                        .map(|_| human_handles[rng.gen_range(0..human_handles.len())].clone())
                        .collect();
                    let retweet = rng.gen_bool(retweet_share).then(|| RetweetRef {
                        tweet_id: tweet_ids.next(),
                        author_id: news_id(rng.gen_range(0..NEWS_ACCOUNTS)),
                        created_at: at - Duration::seconds(rng.gen_range(1_800..40_000)),
                    });
                    let urls = if rng.gen_bool(0.15) { vec![format!("http://blog.example/{}", rng.gen_range(0..500))] } else { Vec::new() };
                    tweets.push(TweetRecord {
                        tweet_id: tweet_ids.next(),
                        author_id: a.user_id.clone(),
                        created_at: at,
                        text: text.join(" "),
                        hashtags,
                        mentions,
                        urls,
                        retweet,
                    });
                }
            }
        }
    }

    let (scores, suspended) = synthetic_scores(&mut rng, &truth, config);
    let view = CorpusView::new(accounts, tweets, Window::new(start, end)?, end)?;
    Ok(SyntheticCorpus {
        view,
        truth,
        scores,
        suspended,
    })
}

fn synthetic_scores<R: Rng>(rng: &mut R, truth: &BTreeMap<String, u8>, config: &SynthConfig) -> (Vec<ScorerOutput>, BTreeSet<String>) {
    let mut scores = Vec::new();
    let mut suspended = BTreeSet::new();
    let out = |s, u: &str, v| ScorerOutput::new(s, u, v, None).expect("generated scores are in range");
    for (user, &y) in truth {
        if y == 1 {
            scores.push(out(ScorerId::A, user, f64::from(rng.gen_range(80..=100u8))));
            if rng.gen_bool(config.suspended_bots) {
                suspended.insert(user.clone());
            } else if rng.gen_bool(config.ambiguous_bots) {
                scores.push(out(ScorerId::B, user, rng.gen_range(1.5..3.5)));
            } else {
                scores.push(out(ScorerId::B, user, rng.gen_range(4.2..5.0)));
            }
        } else {
            scores.push(out(ScorerId::A, user, f64::from(rng.gen_range(0..=20u8))));
            scores.push(out(ScorerId::B, user, rng.gen_range(0.0..0.9)));
        }
    }
    (scores, suspended)
}

/// Users, scores and suspensions whose funnel report has fixed counts.
#[derive(Debug, Clone)]
pub struct FunnelFixture {
    pub users: Vec<String>,
    pub scores: Vec<ScorerOutput>,
    pub suspended: BTreeSet<String>,
}

/// Counts per cell of the funnel fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunnelCells {
    /// A bot, B bot.
    pub agreed_bot: usize,
    /// A bot, no B score, suspended.
    pub suspended_bot: usize,
    /// A bot, B mid or normal.
    pub disputed_bot: usize,
    /// A normal, B normal.
    pub agreed_normal: usize,
    /// A normal, B mid or bot.
    pub disputed_normal: usize,
    /// A mid; never forwarded.
    pub mid: usize,
}

impl Default for FunnelCells {
    fn default() -> Self {
        Self {
            agreed_bot: 2_180,
            suspended_bot: 2_389,
            disputed_bot: 5_755,
            agreed_normal: 7_267,
            disputed_normal: 18_279,
            mid: 4_000,
        }
    }
}

pub fn funnel_fixture(cells: &FunnelCells, seed: u64) -> FunnelFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users = Vec::new();
    let mut scores = Vec::new();
    let mut suspended = BTreeSet::new();
    let mut n = 0u64;
    let mut add = |a: f64, b: Option<f64>, susp: bool, users: &mut Vec<String>| {
        n += 1;
        let id = format!("u{n:07}");
        scores.push(ScorerOutput::new(ScorerId::A, id.as_str(), a, None).unwrap());
        if let Some(b) = b {
            scores.push(ScorerOutput::new(ScorerId::B, id.as_str(), b, None).unwrap());
        }
        if susp {
            suspended.insert(id.clone());
        }
        users.push(id);
    };
    let a_bot = |r: &mut ChaCha8Rng| f64::from(r.gen_range(76..=100u8));
    let a_normal = |r: &mut ChaCha8Rng| f64::from(r.gen_range(0..=24u8));
    for _ in 0..cells.agreed_bot {
        let (a, b) = (a_bot(&mut rng), rng.gen_range(4.01..=5.0));
        add(a, Some(b), false, &mut users);
    }
    for _ in 0..cells.suspended_bot {
        let a = a_bot(&mut rng);
        add(a, None, true, &mut users);
    }
    for _ in 0..cells.disputed_bot {
        let (a, b) = (a_bot(&mut rng), rng.gen_range(0.0..=4.0));
        add(a, Some(b), false, &mut users);
    }
    for _ in 0..cells.agreed_normal {
        let (a, b) = (a_normal(&mut rng), rng.gen_range(0.0..0.99));
        add(a, Some(b), false, &mut users);
    }
    for _ in 0..cells.disputed_normal {
        let (a, b) = (a_normal(&mut rng), rng.gen_range(1.0..=5.0));
        add(a, Some(b), false, &mut users);
    }
    for _ in 0..cells.mid {
        let a = f64::from(rng.gen_range(25..=75u8));
        add(a, None, false, &mut users);
    }
    FunnelFixture {
        users,
        scores,
        suspended,
    }
}
