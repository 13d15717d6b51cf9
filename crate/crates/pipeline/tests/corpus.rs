use std::path::PathBuf;

use botwatch_pipeline::corpus::{ingest, ingest_str, parse_timestamp, CorpusError, CorpusView, IngestOptions};
use botwatch_pipeline::synth::{generate, SynthConfig};
use chrono::Duration;
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn empty_input_gives_empty_view() {
    let (view, report) = ingest_str("", &IngestOptions::default()).unwrap();
    assert_eq!((view.n_accounts(), view.n_tweets()), (0, 0));
    assert_eq!(report.rejected, 0);
}

#[test]
fn three_user_fixture_counts() {
    let (view, report) = ingest(&fixture("three_users.jsonl"), &IngestOptions::default()).unwrap();
    assert_eq!((view.n_accounts(), view.n_tweets()), (3, 5));
    assert_eq!(report.rejected, 0);
    let rt = &view.tweets_of("2")[0];
    assert_eq!(rt.retweet.as_ref().unwrap().author_id, "900");
    assert_eq!(rt.urls, vec!["http://promo.example/1".to_string()]);
    assert!(view.account("1").unwrap().has_location());
    assert!(!view.account("3").unwrap().has_location());
}

#[test]
fn inverted_retweet_is_rejected_and_counted() {
    let strict = ingest(&fixture("inverted_retweet.jsonl"), &IngestOptions::default());
    assert!(matches!(strict, Err(CorpusError::TooManyRejects { rejected: 1, .. })));
    let lenient = IngestOptions {
        tolerance: 0.5,
        ..IngestOptions::default()
    };
    let (view, report) = ingest(&fixture("inverted_retweet.jsonl"), &lenient).unwrap();
    assert_eq!(report.rejected, 1);
    assert_eq!(view.n_tweets(), 5);
}

#[test]
fn duplicate_tweet_id_is_an_error() {
    let text = std::fs::read_to_string(fixture("three_users.jsonl")).unwrap();
    let last = text.lines().last().unwrap();
    let doubled = format!("{text}{last}\n");
    let err = ingest_str(&doubled, &IngestOptions::default()).unwrap_err();
    assert!(matches!(err, CorpusError::DuplicateTweet { .. }));
}

#[test]
fn missing_file_is_an_io_error() {
    let err = ingest(&fixture("no_such_file.jsonl"), &IngestOptions::default()).unwrap_err();
    assert!(matches!(err, CorpusError::Io { .. }));
}

#[test]
fn split_after_fourth_tweet() {
    let (view, _) = ingest(&fixture("sept_oct.jsonl"), &IngestOptions::default()).unwrap();
    assert_eq!(view.n_tweets(), 10);
    let boundary = parse_timestamp("2020-10-01T00:00:00Z").unwrap();
    let (sept, oct) = view.split_by_window(boundary).unwrap();
    assert_eq!((sept.n_tweets(), oct.n_tweets()), (4, 6));
    // user 1 posts in both months
    assert!(sept.is_active("1") && oct.is_active("1"));
    assert!(sept.account("1").is_some() && oct.account("1").is_some());
    assert!(sept.tweets().all(|t| t.created_at < boundary));
    assert!(oct.tweets().all(|t| t.created_at >= boundary));
    assert_eq!(sept.window().end, boundary);
    assert_eq!(oct.window().start, boundary);
}

#[test]
fn degenerate_and_invalid_boundaries() {
    let (view, _) = ingest(&fixture("sept_oct.jsonl"), &IngestOptions::default()).unwrap();
    let (left, right) = view.split_by_window(view.window().start).unwrap();
    assert_eq!((left.n_tweets(), right.n_tweets()), (0, 10));
    let outside = view.window().end + Duration::days(1);
    assert!(matches!(view.split_by_window(outside), Err(CorpusError::BoundaryOutsideWindow { .. })));
}

#[test]
fn export_round_trip() {
    for name in ["three_users.jsonl", "sept_oct.jsonl"] {
        let (view, _) = ingest(&fixture(name), &IngestOptions::default()).unwrap();
        let (again, report) = ingest_str(&view.export_jsonl(), &IngestOptions::default()).unwrap();
        assert_eq!(report.rejected, 0);
        assert_eq!(format!("{view:?}"), format!("{again:?}"));
        assert_eq!(view.digest(), again.digest());
    }
}

#[test]
fn synthetic_corpus_round_trips() {
    let corpus = generate(&SynthConfig {
        n_bots: 5,
        n_humans: 10,
        days: 10,
        ..SynthConfig::default()
    })
    .unwrap();
    let (again, _) = ingest_str(&corpus.view.export_jsonl(), &IngestOptions::default()).unwrap();
    assert_eq!(again.export_jsonl(), corpus.view.export_jsonl());
}

#[test]
fn file_export_matches_string_export() {
    let (view, _) = ingest(&fixture("three_users.jsonl"), &IngestOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.jsonl");
    view.write_export(&path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), view.export_jsonl());
}

fn small_corpus(seed: u64) -> CorpusView {
    generate(&SynthConfig {
        n_bots: 3,
        n_humans: 5,
        days: 8,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
    .view
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn split_partitions_tweets(seed in 0u64..1_000, hours in 0i64..(8 * 24)) {
        let view = small_corpus(seed);
        let boundary = view.window().start + Duration::hours(hours);
        let (left, right) = view.split_by_window(boundary).unwrap();
        prop_assert_eq!(left.n_tweets() + right.n_tweets(), view.n_tweets());
        let mut ids: Vec<String> = left.tweets().chain(right.tweets()).map(|t| t.tweet_id.clone()).collect();
        let mut all: Vec<String> = view.tweets().map(|t| t.tweet_id.clone()).collect();
        ids.sort();
        all.sort();
        prop_assert_eq!(ids, all);
    }

    #[test]
    fn author_lists_are_time_ordered(seed in 0u64..1_000) {
        let view = small_corpus(seed);
        for u in view.user_ids() {
            let list = view.tweets_of(u);
            for w in list.windows(2) {
                prop_assert!((w[0].created_at, &w[0].tweet_id) <= (w[1].created_at, &w[1].tweet_id));
            }
        }
    }
}
