//! Line-delimited corpus of user and tweet objects.
//!
//! Each line is a JSON object shaped like a v1.1 API object:
//!
//! * a tweet, recognised by its `user` field, which may embed the full user
//!   object or only `{"id_str": ...}`;
//! * a standalone user object, recognised by `screen_name`;
//! * at most one metadata line `{"corpus": {"version": 1, "window_start": ..,
//!   "window_end": .., "reference_date": ..}}`.
//!
//! Timestamps use the API form (`Wed Sep 02 14:00:00 +0000 2020`) or
//! RFC 3339, are normalised to UTC, and are kept at one-second resolution.

mod raw;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::digest::sha256_hex;
use raw::{RawEntities, RawMeta, RawTweet, RawUser};

pub type Timestamp = DateTime<Utc>;

pub const CORPUS_VERSION: u32 = 1;
const API_TIME_FORMAT: &str = "%a %b %d %H:%M:%S %z %Y";
const MAX_REJECT_SAMPLES: usize = 20;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{rejected} of {lines} lines rejected, above tolerance {tolerance}")]
    TooManyRejects { rejected: usize, lines: usize, tolerance: f64 },
    #[error("duplicate tweet id {tweet_id} on line {line}")]
    DuplicateTweet { tweet_id: String, line: usize },
    #[error("second corpus metadata line on line {line}")]
    DuplicateMeta { line: usize },
    #[error("window boundary {boundary} outside [{start}, {end}]")]
    BoundaryOutsideWindow {
        boundary: Timestamp,
        start: Timestamp,
        end: Timestamp,
    },
    #[error("invalid corpus: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Url,
    Hashtag,
    Mention,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionEntity {
    pub kind: EntityKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountRecord {
    pub user_id: String,
    pub name: String,
    pub screen_name: String,
    pub description: String,
    pub created_at: Timestamp,
    pub statuses_count: u64,
    pub followers_count: u64,
    pub friends_count: u64,
    pub favourites_count: u64,
    pub listed_count: u64,
    pub verified: bool,
    pub protected: bool,
    pub default_profile: bool,
    pub has_background_image: bool,
    pub has_geolocation: bool,
    /// Free-text profile location; empty when unset.
    pub location: String,
    pub description_entities: Vec<DescriptionEntity>,
}

impl AccountRecord {
    pub fn has_location(&self) -> bool {
        !self.location.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetweetRef {
    pub tweet_id: String,
    pub author_id: String,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub author_id: String,
    pub created_at: Timestamp,
    pub text: String,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub urls: Vec<String>,
    pub retweet: Option<RetweetRef>,
}

impl TweetRecord {
    pub fn is_retweet(&self) -> bool {
        self.retweet.is_some()
    }
}

/// Closed time interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Window {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self, CorpusError> {
        if start > end {
            return Err(CorpusError::Invalid(format!("window start {start} after end {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t <= self.end
    }

    /// Calendar days covered, rounded up, at least 1.
    pub fn days(&self) -> u64 {
        let secs = (self.end - self.start).num_seconds().max(0) as u64;
        secs.div_ceil(86_400).max(1)
    }
}

/// Identifies the corpus view a fitted statistic was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus_digest: String,
    pub window: Window,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Largest tolerated fraction of rejected non-blank lines.
    pub tolerance: f64,
    /// Keep only tweets inside this window; others are dropped and counted.
    pub window: Option<Window>,
    pub reference_date: Option<Timestamp>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.001,
            window: None,
            reference_date: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectSample {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines: usize,
    pub blank_lines: usize,
    pub accounts: usize,
    pub tweets: usize,
    pub rejected: usize,
    pub rejects_by_reason: BTreeMap<String, usize>,
    pub reject_samples: Vec<RejectSample>,
    pub dropped_outside_window: usize,
    pub window: Window,
    pub reference_date: Timestamp,
}

/// Validated, immutable corpus over one time window.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusView {
    accounts: BTreeMap<String, AccountRecord>,
    tweets: BTreeMap<String, Vec<TweetRecord>>,
    window: Window,
    reference_date: Timestamp,
}

fn sort_tweets(list: &mut [TweetRecord]) {
    list.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.tweet_id.cmp(&b.tweet_id)));
}

impl CorpusView {
    /// Builds a view from records, checking every invariant.
    pub fn new(
        accounts: Vec<AccountRecord>,
        tweets: Vec<TweetRecord>,
        window: Window,
        reference_date: Timestamp,
    ) -> Result<Self, CorpusError> {
        let mut acc = BTreeMap::new();
        for a in accounts {
            validate_account(&a, reference_date).map_err(CorpusError::Invalid)?;
            if acc.insert(a.user_id.clone(), a).is_some() {
                return Err(CorpusError::Invalid("duplicate account".into()));
            }
        }
        let mut seen = BTreeSet::new();
        let mut by_author: BTreeMap<String, Vec<TweetRecord>> = BTreeMap::new();
        for t in tweets {
            if !seen.insert(t.tweet_id.clone()) {
                return Err(CorpusError::Invalid(format!("duplicate tweet id {}", t.tweet_id)));
            }
            if !window.contains(t.created_at) {
                return Err(CorpusError::Invalid(format!("tweet {} outside window", t.tweet_id)));
            }
            let author = acc
                .get(&t.author_id)
                .ok_or_else(|| CorpusError::Invalid(format!("tweet {} has unknown author", t.tweet_id)))?;
            validate_tweet(&t, author).map_err(CorpusError::Invalid)?;
            by_author.entry(t.author_id.clone()).or_default().push(t);
        }
        for list in by_author.values_mut() {
            sort_tweets(list);
        }
        Ok(Self {
            accounts: acc,
            tweets: by_author,
            window,
            reference_date,
        })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn reference_date(&self) -> Timestamp {
        self.reference_date
    }

    pub fn n_accounts(&self) -> usize {
        self.accounts.len()
    }

    pub fn n_tweets(&self) -> usize {
        self.tweets.values().map(Vec::len).sum()
    }

    /// Accounts in ascending id order.
    pub fn accounts(&self) -> impl Iterator<Item = &AccountRecord> {
        self.accounts.values()
    }

    pub fn account(&self, user_id: &str) -> Option<&AccountRecord> {
        self.accounts.get(user_id)
    }

    pub fn user_ids(&self) -> impl Iterator<Item = &str> {
        self.accounts.keys().map(String::as_str)
    }

    /// The user's tweets and retweets in time order; empty for inactive or
    /// unknown users.
    pub fn tweets_of(&self, user_id: &str) -> &[TweetRecord] {
        self.tweets.get(user_id).map_or(&[], Vec::as_slice)
    }

    /// All tweets, grouped by author in id order, each group time-ordered.
    pub fn tweets(&self) -> impl Iterator<Item = &TweetRecord> {
        self.tweets.values().flatten()
    }

    pub fn is_active(&self, user_id: &str) -> bool {
        self.tweets.contains_key(user_id)
    }

    /// Splits at `boundary`: tweets strictly before it go left, the rest
    /// right. Each side keeps the accounts that posted in it. Accounts with
    /// no tweets at all are kept on both sides when they existed by that
    /// side's reference date.
    pub fn split_by_window(&self, boundary: Timestamp) -> Result<(CorpusView, CorpusView), CorpusError> {
        if !self.window.contains(boundary) {
            return Err(CorpusError::BoundaryOutsideWindow {
                boundary,
                start: self.window.start,
                end: self.window.end,
            });
        }
        let left_window = Window {
            start: self.window.start,
            end: boundary,
        };
        let right_window = Window {
            start: boundary,
            end: self.window.end,
        };
        let mut left = CorpusView {
            accounts: BTreeMap::new(),
            tweets: BTreeMap::new(),
            window: left_window,
            reference_date: boundary.min(self.reference_date),
        };
        let mut right = CorpusView {
            accounts: BTreeMap::new(),
            tweets: BTreeMap::new(),
            window: right_window,
            reference_date: self.reference_date,
        };
        for (id, account) in &self.accounts {
            let list = self.tweets_of(id);
            let cut = list.partition_point(|t| t.created_at < boundary);
            let (l, r) = list.split_at(cut);
            let inactive = list.is_empty();
            if !l.is_empty() || (inactive && account.created_at <= left.reference_date) {
                left.accounts.insert(id.clone(), account.clone());
            }
            if !l.is_empty() {
                left.tweets.insert(id.clone(), l.to_vec());
            }
            if !r.is_empty() || inactive {
                right.accounts.insert(id.clone(), account.clone());
            }
            if !r.is_empty() {
                right.tweets.insert(id.clone(), r.to_vec());
            }
        }
        Ok((left, right))
    }

    /// Serialises the view in the ingest format. Re-ingesting the output
    /// yields an equal view.
    pub fn export_jsonl(&self) -> String {
        let mut out = String::new();
        let meta = json!({"corpus": RawMeta {
            version: CORPUS_VERSION,
            window_start: Some(rfc3339(self.window.start)),
            window_end: Some(rfc3339(self.window.end)),
            reference_date: Some(rfc3339(self.reference_date)),
        }});
        out.push_str(&meta.to_string());
        out.push('\n');
        for a in self.accounts.values() {
            out.push_str(&user_json(a).to_string());
            out.push('\n');
        }
        for t in self.tweets() {
            out.push_str(&tweet_json(t).to_string());
            out.push('\n');
        }
        out
    }

    pub fn write_export(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, self.export_jsonl()).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// SHA-256 of the canonical export; identifies the view in provenance
    /// records.
    pub fn digest(&self) -> String {
        sha256_hex(self.export_jsonl().as_bytes())
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            corpus_digest: self.digest(),
            window: self.window,
        }
    }
}

fn rfc3339(t: Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn api_time(t: Timestamp) -> String {
    t.format("%a %b %d %H:%M:%S +0000 %Y").to_string()
}

pub fn parse_timestamp(s: &str) -> Result<Timestamp, String> {
    let s = s.trim();
    let parsed = DateTime::parse_from_str(s, API_TIME_FORMAT)
        .or_else(|_| DateTime::parse_from_rfc3339(s))
        .map_err(|_| format!("unparseable timestamp {s:?}"))?;
    let utc = parsed.with_timezone(&Utc);
    Ok(utc.with_nanosecond(0).expect("zero nanoseconds is valid"))
}

fn user_json(a: &AccountRecord) -> Value {
    let mut ents = RawEntities::default();
    for e in &a.description_entities {
        match e.kind {
            EntityKind::Url => ents.urls.push(raw::RawUrl {
                expanded_url: Some(e.text.clone()),
                url: None,
            }),
            EntityKind::Hashtag => ents.hashtags.push(raw::RawTag { text: e.text.clone() }),
            EntityKind::Mention => ents.user_mentions.push(raw::RawMention {
                screen_name: e.text.clone(),
            }),
        }
    }
    json!({
        "id_str": a.user_id,
        "name": a.name,
        "screen_name": a.screen_name,
        "description": a.description,
        "created_at": api_time(a.created_at),
        "statuses_count": a.statuses_count,
        "followers_count": a.followers_count,
        "friends_count": a.friends_count,
        "favourites_count": a.favourites_count,
        "listed_count": a.listed_count,
        "verified": a.verified,
        "protected": a.protected,
        "default_profile": a.default_profile,
        "profile_use_background_image": a.has_background_image,
        "geo_enabled": a.has_geolocation,
        "location": a.location,
        "entities": {"description": ents},
    })
}

fn tweet_json(t: &TweetRecord) -> Value {
    let mut v = json!({
        "id_str": t.tweet_id,
        "created_at": api_time(t.created_at),
        "text": t.text,
        "user": {"id_str": t.author_id},
        "entities": {
            "hashtags": t.hashtags.iter().map(|h| json!({"text": h})).collect::<Vec<_>>(),
            "user_mentions": t.mentions.iter().map(|m| json!({"screen_name": m})).collect::<Vec<_>>(),
            "urls": t.urls.iter().map(|u| json!({"expanded_url": u})).collect::<Vec<_>>(),
        },
    });
    if let Some(rt) = &t.retweet {
        v["retweeted_status"] = json!({
            "id_str": rt.tweet_id,
            "created_at": api_time(rt.created_at),
            "user": {"id_str": rt.author_id},
        });
    }
    v
}

fn nonneg(name: &str, v: i64) -> Result<u64, String> {
    u64::try_from(v).map_err(|_| format!("negative {name}"))
}

fn convert_user(u: RawUser) -> Result<AccountRecord, String> {
    let user_id = u.id.resolve().ok_or("user without id")?;
    let mut description_entities = Vec::new();
    if let Some(d) = u.entities.and_then(|e| e.description) {
        for url in &d.urls {
            if let Some(text) = url.resolve() {
                description_entities.push(DescriptionEntity {
                    kind: EntityKind::Url,
                    text,
                });
            }
        }
        for h in d.hashtags {
            description_entities.push(DescriptionEntity {
                kind: EntityKind::Hashtag,
                text: h.text,
            });
        }
        for m in d.user_mentions {
            description_entities.push(DescriptionEntity {
                kind: EntityKind::Mention,
                text: m.screen_name,
            });
        }
    }
    Ok(AccountRecord {
        user_id,
        name: u.name.unwrap_or_default(),
        screen_name: u.screen_name,
        description: u.description.unwrap_or_default(),
        created_at: parse_timestamp(&u.created_at)?,
        statuses_count: nonneg("statuses_count", u.statuses_count)?,
        followers_count: nonneg("followers_count", u.followers_count)?,
        friends_count: nonneg("friends_count", u.friends_count)?,
        favourites_count: nonneg("favourites_count", u.favourites_count)?,
        listed_count: nonneg("listed_count", u.listed_count)?,
        verified: u.verified.unwrap_or(false),
        protected: u.protected.unwrap_or(false),
        default_profile: u.default_profile.unwrap_or(false),
        has_background_image: u.profile_use_background_image.unwrap_or(false),
        has_geolocation: u.geo_enabled.unwrap_or(false),
        location: u.location.unwrap_or_default(),
        description_entities,
    })
}

fn convert_tweet(t: RawTweet) -> Result<(TweetRecord, Option<RawUser>), String> {
    let tweet_id = t.id.resolve().ok_or("tweet without id")?;
    let embedded = if t.user.get("screen_name").is_some() {
        Some(serde_json::from_value::<RawUser>(t.user.clone()).map_err(|e| format!("embedded user: {e}"))?)
    } else {
        None
    };
    let author_id = serde_json::from_value::<raw::RawId>(t.user)
        .ok()
        .and_then(|id| id.resolve())
        .ok_or("tweet without author id")?;
    let created_at = parse_timestamp(&t.created_at)?;
    let text = t
        .extended_tweet
        .and_then(|e| e.full_text)
        .or(t.full_text)
        .or(t.text)
        .unwrap_or_default();
    let ents = t.entities.unwrap_or_default();
    let retweet = match t.retweeted_status {
        None => None,
        Some(rt) => {
            let rt_id = rt.id.resolve().ok_or("retweet without original id")?;
            let rt_author = rt
                .user
                .and_then(|u| u.resolve())
                .ok_or("retweet without original author")?;
            let rt_time = parse_timestamp(rt.created_at.as_deref().ok_or("retweet without original timestamp")?)?;
            Some(RetweetRef {
                tweet_id: rt_id,
                author_id: rt_author,
                created_at: rt_time,
            })
        }
    };
    let record = TweetRecord {
        tweet_id,
        author_id,
        created_at,
        text,
        hashtags: ents.hashtags.into_iter().map(|h| h.text).collect(),
        mentions: ents.user_mentions.into_iter().map(|m| m.screen_name).collect(),
        urls: ents.urls.iter().filter_map(|u| u.resolve()).collect(),
        retweet,
    };
    Ok((record, embedded))
}

fn validate_account(a: &AccountRecord, reference: Timestamp) -> Result<(), String> {
    if a.user_id.is_empty() {
        return Err("empty user id".into());
    }
    if a.created_at > reference {
        return Err("account created after reference date".into());
    }
    Ok(())
}

fn validate_tweet(t: &TweetRecord, author: &AccountRecord) -> Result<(), String> {
    if let Some(rt) = &t.retweet {
        if rt.created_at > t.created_at {
            return Err("retweet precedes original".into());
        }
    }
    if t.created_at < author.created_at {
        return Err("tweet predates its author".into());
    }
    Ok(())
}

/// Short reason class used as the reject counter key.
fn reason_key(reason: &str) -> String {
    reason.split(':').next().unwrap_or(reason).trim().to_string()
}

struct Rejects {
    total: usize,
    by_reason: BTreeMap<String, usize>,
    samples: Vec<RejectSample>,
}

impl Rejects {
    fn add(&mut self, line: usize, reason: String) {
        self.total += 1;
        *self.by_reason.entry(reason_key(&reason)).or_default() += 1;
        if self.samples.len() < MAX_REJECT_SAMPLES {
            self.samples.push(RejectSample { line, reason });
        }
    }
}

/// Ranks competing snapshots of one user: standalone lines beat embedded
/// copies, later tweets beat earlier ones.
type SnapshotKey = (u8, Timestamp, String);

pub fn ingest(path: &Path, options: &IngestOptions) -> Result<(CorpusView, IngestReport), CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(file, options).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn ingest_str(text: &str, options: &IngestOptions) -> Result<(CorpusView, IngestReport), CorpusError> {
    ingest_reader(text.as_bytes(), options)
}

pub fn ingest_reader<R: Read>(reader: R, options: &IngestOptions) -> Result<(CorpusView, IngestReport), CorpusError> {
    let mut rejects = Rejects {
        total: 0,
        by_reason: BTreeMap::new(),
        samples: Vec::new(),
    };
    let mut lines = 0usize;
    let mut blank = 0usize;
    let mut meta: Option<RawMeta> = None;
    let mut snapshots: BTreeMap<String, (SnapshotKey, usize, AccountRecord)> = BTreeMap::new();
    let mut tweets: Vec<(usize, TweetRecord)> = Vec::new();
    let mut tweet_ids = BTreeSet::new();

    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: PathBuf::new(),
            source,
        })?;
        lines += 1;
        if line.trim().is_empty() {
            blank += 1;
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                rejects.add(line_no, format!("malformed json: {e}"));
                continue;
            }
        };
        if let Some(m) = value.get("corpus") {
            if meta.is_some() {
                return Err(CorpusError::DuplicateMeta { line: line_no });
            }
            match serde_json::from_value::<RawMeta>(m.clone()) {
                Ok(m) if m.version == CORPUS_VERSION => meta = Some(m),
                Ok(m) => rejects.add(line_no, format!("unsupported corpus version: {}", m.version)),
                Err(e) => rejects.add(line_no, format!("malformed metadata: {e}")),
            }
        } else if value.get("user").is_some() {
            let converted = serde_json::from_value::<RawTweet>(value)
                .map_err(|e| format!("malformed tweet: {e}"))
                .and_then(convert_tweet);
            match converted {
                Ok((tweet, embedded)) => {
                    if !tweet_ids.insert(tweet.tweet_id.clone()) {
                        return Err(CorpusError::DuplicateTweet {
                            tweet_id: tweet.tweet_id,
                            line: line_no,
                        });
                    }
                    if let Some(u) = embedded {
                        match convert_user(u) {
                            Ok(acc) if acc.user_id == tweet.author_id => {
                                let key = (0, tweet.created_at, tweet.tweet_id.clone());
                                let replace = snapshots.get(&acc.user_id).is_none_or(|(k, _, _)| *k < key);
                                if replace {
                                    snapshots.insert(acc.user_id.clone(), (key, line_no, acc));
                                }
                            }
                            Ok(_) => {
                                rejects.add(line_no, "embedded user id differs from author".into());
                                continue;
                            }
                            Err(e) => {
                                rejects.add(line_no, format!("malformed user: {e}"));
                                continue;
                            }
                        }
                    }
                    tweets.push((line_no, tweet));
                }
                Err(e) => rejects.add(line_no, e),
            }
        } else if value.get("screen_name").is_some() {
            let converted = serde_json::from_value::<RawUser>(value)
                .map_err(|e| format!("malformed user: {e}"))
                .and_then(convert_user);
            match converted {
                Ok(acc) => {
                    let key: SnapshotKey = (1, DateTime::<Utc>::MIN_UTC, String::new());
                    if snapshots.get(&acc.user_id).is_some_and(|(k, _, _)| k.0 == 1) {
                        rejects.add(line_no, "duplicate user record".into());
                        continue;
                    }
                    snapshots.insert(acc.user_id.clone(), (key, line_no, acc));
                }
                Err(e) => rejects.add(line_no, e),
            }
        } else {
            rejects.add(line_no, "unrecognized record".into());
        }
    }

    let parse_meta = |s: &Option<String>| -> Result<Option<Timestamp>, CorpusError> {
        s.as_deref()
            .map(parse_timestamp)
            .transpose()
            .map_err(|e| CorpusError::Invalid(format!("metadata: {e}")))
    };
    let (meta_start, meta_end, meta_ref) = match &meta {
        Some(m) => (
            parse_meta(&m.window_start)?,
            parse_meta(&m.window_end)?,
            parse_meta(&m.reference_date)?,
        ),
        None => (None, None, None),
    };
    let declared = match (meta_start, meta_end) {
        (Some(s), Some(e)) => Some(Window::new(s, e)?),
        (None, None) => None,
        _ => return Err(CorpusError::Invalid("metadata window needs both ends".into())),
    };

    let mut dropped = 0usize;
    if let Some(w) = options.window {
        let before = tweets.len();
        tweets.retain(|(_, t)| w.contains(t.created_at));
        dropped = before - tweets.len();
    }
    if let Some(w) = declared.filter(|_| options.window.is_none()) {
        tweets.retain(|(line, t)| {
            let inside = w.contains(t.created_at);
            if !inside {
                rejects.add(*line, "tweet outside declared window".into());
            }
            inside
        });
    }
    let window = match options.window.or(declared) {
        Some(w) => w,
        None => {
            let lo = tweets.iter().map(|(_, t)| t.created_at).min();
            let hi = tweets.iter().map(|(_, t)| t.created_at).max();
            match (lo, hi) {
                (Some(lo), Some(hi)) => Window { start: lo, end: hi },
                _ => {
                    let t = DateTime::<Utc>::UNIX_EPOCH;
                    Window { start: t, end: t }
                }
            }
        }
    };
    let reference_date = options.reference_date.or(meta_ref).unwrap_or(window.end);

    let mut accounts = BTreeMap::new();
    for (id, (_, line, acc)) in snapshots {
        match validate_account(&acc, reference_date) {
            Ok(()) => {
                accounts.insert(id, acc);
            }
            Err(e) => rejects.add(line, e),
        }
    }
    let mut by_author: BTreeMap<String, Vec<TweetRecord>> = BTreeMap::new();
    for (line, t) in tweets {
        let Some(author) = accounts.get(&t.author_id) else {
            rejects.add(line, "tweet author has no account record".into());
            continue;
        };
        if let Err(e) = validate_tweet(&t, author) {
            rejects.add(line, e);
            continue;
        }
        by_author.entry(t.author_id.clone()).or_default().push(t);
    }
    for list in by_author.values_mut() {
        sort_tweets(list);
    }

    let content_lines = lines - blank;
    if content_lines > 0 && rejects.total as f64 > options.tolerance * content_lines as f64 {
        return Err(CorpusError::TooManyRejects {
            rejected: rejects.total,
            lines: content_lines,
            tolerance: options.tolerance,
        });
    }
    let view = CorpusView {
        accounts,
        tweets: by_author,
        window,
        reference_date,
    };
    let report = IngestReport {
        lines,
        blank_lines: blank,
        accounts: view.n_accounts(),
        tweets: view.n_tweets(),
        rejected: rejects.total,
        rejects_by_reason: rejects.by_reason,
        reject_samples: rejects.samples,
        dropped_outside_window: dropped,
        window,
        reference_date,
    };
    Ok((view, report))
}
