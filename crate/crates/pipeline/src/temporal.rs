//! The 99 time-based features: weekday and hour activity shares per stream,
//! daily posting rates, and retweet delay statistics. All in UTC.

use chrono::{Datelike, Timelike};
use thiserror::Error;

use crate::corpus::{Timestamp, TweetRecord, Window};

pub const TEMPORAL_DIM: usize = 99;

#[derive(Debug, Error, PartialEq)]
pub enum TemporalError {
    #[error("tweet {0} is not a retweet")]
    NotARetweet(String),
    #[error("retweet {0} predates its original")]
    NegativeDelay(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Buckets {
    /// Monday = 0.
    Weekday,
    Hour,
}

impl Buckets {
    pub fn len(self) -> usize {
        match self {
            Buckets::Weekday => 7,
            Buckets::Hour => 24,
        }
    }

    fn of(self, t: Timestamp) -> usize {
        match self {
            Buckets::Weekday => t.weekday().num_days_from_monday() as usize,
            Buckets::Hour => t.hour() as usize,
        }
    }
}

pub fn temporal_names() -> Vec<String> {
    let mut out = Vec::with_capacity(TEMPORAL_DIM);
    for s in ["daily_rt", "daily_tw", "daily_rt_tw"] {
        out.extend((0..7).map(|d| format!("{s}_{d}")));
    }
    out.push("daily_retweet_avg".into());
    out.push("daily_tweet_avg".into());
    for s in ["hourly_rt", "hourly_tw", "hourly_rt_tw"] {
        out.extend((0..24).map(|h| format!("{s}_{h}")));
    }
    for s in ["min", "max", "avg", "std"] {
        out.push(format!("retweet_time_{s}"));
    }
    out
}

/// Bucket shares; all missing when there are no timestamps.
pub fn activity_shares(timestamps: &[Timestamp], buckets: Buckets) -> Vec<f64> {
    if timestamps.is_empty() {
        return vec![f64::NAN; buckets.len()];
    }
    let mut counts = vec![0u64; buckets.len()];
    for &t in timestamps {
        counts[buckets.of(t)] += 1;
    }
    let n = timestamps.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    pub std: f64,
}

/// Seconds between each original and its retweet; `None` without retweets.
/// The standard deviation is the population one.
pub fn retweet_delays(retweets: &[&TweetRecord]) -> Result<Option<DelayStats>, TemporalError> {
    let mut delays = Vec::with_capacity(retweets.len());
    for t in retweets {
        let rt = t.retweet.as_ref().ok_or_else(|| TemporalError::NotARetweet(t.tweet_id.clone()))?;
        let d = (t.created_at - rt.created_at).num_seconds();
        if d < 0 {
            return Err(TemporalError::NegativeDelay(t.tweet_id.clone()));
        }
        delays.push(d as f64);
    }
    if delays.is_empty() {
        return Ok(None);
    }
    delays.sort_by(f64::total_cmp);
    let n = delays.len() as f64;
    let avg = delays.iter().sum::<f64>() / n;
    let var = delays.iter().map(|d| (d - avg).powi(2)).sum::<f64>() / n;
    Ok(Some(DelayStats {
        min: delays[0],
        max: delays[delays.len() - 1],
        avg,
        std: var.sqrt(),
    }))
}

/// Posts per day over the whole corpus window.
pub fn daily_average(count: usize, window: &Window) -> f64 {
    count as f64 / window.days() as f64
}

/// All 99 slots in [`temporal_names`] order.
pub fn extract_temporal(posts: &[TweetRecord], window: &Window) -> Result<Vec<f64>, TemporalError> {
    let rt: Vec<Timestamp> = posts.iter().filter(|t| t.is_retweet()).map(|t| t.created_at).collect();
    let tw: Vec<Timestamp> = posts.iter().filter(|t| !t.is_retweet()).map(|t| t.created_at).collect();
    let all: Vec<Timestamp> = posts.iter().map(|t| t.created_at).collect();
    let mut out = Vec::with_capacity(TEMPORAL_DIM);
    for s in [&rt, &tw, &all] {
        out.extend(activity_shares(s, Buckets::Weekday));
    }
    out.push(daily_average(rt.len(), window));
    out.push(daily_average(tw.len(), window));
    for s in [&rt, &tw, &all] {
        out.extend(activity_shares(s, Buckets::Hour));
    }
    let retweets: Vec<&TweetRecord> = posts.iter().filter(|t| t.is_retweet()).collect();
    match retweet_delays(&retweets)? {
        Some(d) => out.extend([d.min, d.max, d.avg, d.std]),
        None => out.extend([f64::NAN; 4]),
    }
    debug_assert_eq!(out.len(), TEMPORAL_DIM);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_timestamp, RetweetRef};

    fn ts(s: &str) -> Timestamp {
        parse_timestamp(s).unwrap()
    }

    fn retweet(id: &str, at: &str, original: &str) -> TweetRecord {
        TweetRecord {
            tweet_id: id.into(),
            author_id: "u".into(),
            created_at: ts(at),
            text: String::new(),
            hashtags: vec![],
            mentions: vec![],
            urls: vec![],
            retweet: Some(RetweetRef {
                tweet_id: format!("o{id}"),
                author_id: "v".into(),
                created_at: ts(original),
            }),
        }
    }

    #[test]
    fn shares() {
        let h = activity_shares(&[ts("2020-09-07T00:10:00Z"), ts("2020-09-07T12:00:00Z")], Buckets::Hour);
        assert_eq!((h[0], h[12]), (0.5, 0.5));
        assert_eq!(h.iter().sum::<f64>(), 1.0);
        // 2020-09-07 is a Monday
        let d = activity_shares(&[ts("2020-09-07T05:00:00Z"), ts("2020-09-14T23:00:00Z")], Buckets::Weekday);
        assert_eq!(d, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(activity_shares(&[], Buckets::Hour).iter().all(|v| v.is_nan()));
    }

    #[test]
    fn delays() {
        let a = retweet("1", "2020-09-01T00:01:00Z", "2020-09-01T00:00:00Z");
        let d = retweet_delays(&[&a]).unwrap().unwrap();
        assert_eq!((d.min, d.max, d.avg, d.std), (60.0, 60.0, 60.0, 0.0));
        let b = retweet("2", "2020-09-01T00:00:10Z", "2020-09-01T00:00:00Z");
        let c = retweet("3", "2020-09-01T00:00:30Z", "2020-09-01T00:00:00Z");
        let d = retweet_delays(&[&b, &c]).unwrap().unwrap();
        assert_eq!((d.min, d.max, d.avg, d.std), (10.0, 30.0, 20.0, 10.0));
        assert_eq!(retweet_delays(&[]).unwrap(), None);
        let bad = retweet("4", "2020-09-01T00:00:00Z", "2020-09-01T00:00:30Z");
        assert_eq!(retweet_delays(&[&bad]), Err(TemporalError::NegativeDelay("4".into())));
    }

    #[test]
    fn daily_rates() {
        let w = Window::new(ts("2020-09-01T00:00:00Z"), ts("2020-10-01T00:00:00Z")).unwrap();
        assert_eq!(daily_average(30, &w), 1.0);
        assert_eq!(daily_average(0, &w), 0.0);
        assert_eq!(daily_average(45, &w), 1.5);
    }

    #[test]
    fn names() {
        let n = temporal_names();
        assert_eq!(n.len(), TEMPORAL_DIM);
        assert_eq!(TEMPORAL_DIM, 3 * 7 + 3 * 24 + 2 + 4);
        assert_eq!(n[21], "daily_retweet_avg");
        assert_eq!(n[98], "retweet_time_std");
    }
}
