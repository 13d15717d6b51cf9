use std::collections::BTreeMap;
use std::path::PathBuf;

use botwatch_pipeline::context::{context_names, extract_context, fit_corpus_stats, tfidf, CorpusStats, CONTEXT_DIM};
use botwatch_pipeline::corpus::{ingest, parse_timestamp, AccountRecord, CorpusView, IngestOptions, RetweetRef, Timestamp, TweetRecord};
use botwatch_pipeline::embedding::{train_embeddings, EmbeddingConfig};
use botwatch_pipeline::featurize::{
    canonical_spec, check_no_leakage, featurize, fit_statistics, FeatureMatrix, FeaturizeError, FitConfig, CATEGORIES,
    TOTAL_DIM,
};
use botwatch_pipeline::graph::{build_graph, RetweetGraph, GRAPH_DIM};
use botwatch_pipeline::profile::*;
use botwatch_pipeline::temporal::{activity_shares, extract_temporal, temporal_names, Buckets, TEMPORAL_DIM};
use botwatch_pipeline::text::{top_k, Tokenizer};
use chrono::Duration;
use proptest::prelude::*;

fn fixture_view(name: &str) -> CorpusView {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    ingest(&path, &IngestOptions::default()).unwrap().0
}

fn ts(s: &str) -> Timestamp {
    parse_timestamp(s).unwrap()
}

fn post(id: &str, at: Timestamp) -> TweetRecord {
    TweetRecord {
        tweet_id: id.into(),
        author_id: "u".into(),
        created_at: at,
        text: String::new(),
        hashtags: vec![],
        mentions: vec![],
        urls: vec![],
        retweet: None,
    }
}

fn assert_same(got: &[f64], want: &[f64], names: &[String]) {
    assert_eq!(got.len(), want.len());
    for ((g, w), n) in got.iter().zip(want).zip(names) {
        let ok = (g.is_nan() && w.is_nan()) || (g - w).abs() <= 1e-12 * w.abs().max(1.0);
        assert!(ok, "{n}: got {g}, want {w}");
    }
}

// ---------- profile ----------

#[test]
fn profile_vector_matches_hand_table() {
    let view = fixture_view("three_users.jsonl");
    let account = view.account("2").unwrap();
    let model = BigramModel::uniform("abc".chars());
    let got = extract_profile(account, view.tweets_of("2"), &model, view.reference_date());
    // Aug 04 10:00 to Sep 04 12:00
    let age = 31.0 + 2.0 / 24.0;
    let want = [
        10.0,       // statuses_count
        0.0,        // entities_count
        5.0,        // followers_count
        7.0,        // friends_count
        1.0,        // favourites_count
        0.0,        // listed_count
        7.0,        // name_len "Promo 2"
        0.0,        // geolocation
        0.0,        // protected
        0.0,        // location
        0.0,        // background_img
        0.0,        // default_profile
        0.0,        // verified
        10.0,       // screen_name_len "zorqua4411"
        0.0,        // description_len
        0.25,       // uniform over a, b, c and the unknown symbol
        2.0 / 12.0, // {o, r} over twelve distinct characters
        10.0,       // one retweet in the window
        1.0,
        4.0,
        10.0 / age,
        5.0 / age,
        7.0 / age,
        1.0 / age,
        0.0,
        5.0 / 7.0,
    ];
    let names: Vec<String> = PROFILE_NAMES.iter().map(|s| s.to_string()).collect();
    assert_same(&got, &want, &names);
}

fn blank_account() -> AccountRecord {
    AccountRecord {
        user_id: "z".into(),
        name: String::new(),
        screen_name: "user123".into(),
        description: String::new(),
        created_at: ts("2020-09-30T00:00:00Z"),
        statuses_count: 0,
        followers_count: 0,
        friends_count: 0,
        favourites_count: 0,
        listed_count: 0,
        verified: false,
        protected: false,
        default_profile: false,
        has_background_image: false,
        has_geolocation: false,
        location: String::new(),
        description_entities: vec![],
    }
}

#[test]
fn zero_count_account_and_clamps() {
    let a = blank_account();
    let f = extract_profile(&a, &[], &BigramModel::uniform("ab".chars()), a.created_at);
    let slot = slot_map();
    assert_eq!(f[slot["screen_name_digits"]], 3.0);
    assert_eq!(f[slot["tweet_retweet_ratio"]], 0.0);
    assert_eq!(f[slot["followers_friends"]], 0.0);
    for name in ["statuses_count", "followers_count", "friends_count", "favourites_count", "listed_count"] {
        assert_eq!(f[slot[name]], 0.0, "{name}");
    }
    assert_eq!(account_age_days(a.created_at, a.created_at), 1.0);

    let seven = AccountRecord {
        followers_count: 7,
        friends_count: 0,
        ..blank_account()
    };
    assert_eq!(rate_features(&seven, a.created_at).followers_friends, 7.0);
    let hundred = AccountRecord {
        followers_count: 100,
        ..blank_account()
    };
    let r = rate_features(&hundred, a.created_at + Duration::days(50));
    assert_eq!(r.followers_by_age, 2.0);
    assert_eq!(tweet_retweet_ratio(100, 20), 5.0);
    assert_eq!(tweet_retweet_ratio(100, 0), 100.0);
    assert_eq!(tweet_retweet_ratio(0, 5), 0.0);
}

#[test]
fn baseline_subset_has_twenty_slots() {
    let idx = baseline_indices();
    assert_eq!(idx.len(), 20);
    assert_eq!(PROFILE_DIM - idx.len(), NEW_PROFILE_FEATURES.len());
}

#[test]
fn certain_bigrams_give_likelihood_one() {
    // alphabet a, b, unknown: a -> b and b -> a with certainty
    let rows = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0 / 3.0; 3]];
    let m = BigramModel::from_rows(vec!['a', 'b'], rows).unwrap();
    assert_eq!(m.likelihood("ababab"), 1.0);
    assert!(BigramModel::from_rows(vec!['a'], vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
}

proptest! {
    #[test]
    fn jaccard_symmetric_and_bounded(a in "[a-zA-Z0-9_ ]{0,12}", b in "[a-zA-Z0-9_ ]{0,12}") {
        let s = jaccard_name_similarity(&a, &b);
        prop_assert_eq!(s, jaccard_name_similarity(&b, &a));
        prop_assert!((0.0..=1.0).contains(&s));
        let same = a.to_lowercase().chars().collect::<std::collections::BTreeSet<_>>()
            == b.to_lowercase().chars().collect::<std::collections::BTreeSet<_>>();
        prop_assert_eq!(s == 1.0, same);
    }

    #[test]
    fn likelihood_ignores_case(names in prop::collection::vec("[a-z0-9]{1,10}", 1..20), probe in "[a-zA-Z0-9]{0,12}") {
        let m = BigramModel::fit(names.iter().map(String::as_str));
        let l = m.likelihood(&probe);
        prop_assert!((0.0..=1.0).contains(&l));
        prop_assert_eq!(l, m.likelihood(&probe.to_lowercase()));
        prop_assert_eq!(l, m.likelihood(&probe.to_uppercase()));
    }

    #[test]
    fn by_age_slots_halve_when_age_doubles(days in 1i64..3000, followers in 0u64..100_000) {
        let a = AccountRecord { followers_count: followers, statuses_count: followers / 3, ..blank_account() };
        let r1 = rate_features(&a, a.created_at + Duration::days(days));
        let r2 = rate_features(&a, a.created_at + Duration::days(2 * days));
        prop_assert!((r1.followers_by_age - 2.0 * r2.followers_by_age).abs() <= 1e-9 * r1.followers_by_age.max(1.0));
        prop_assert!((r1.tweets_by_age - 2.0 * r2.tweets_by_age).abs() <= 1e-9 * r1.tweets_by_age.max(1.0));
    }
}

// ---------- text and context ----------

#[test]
fn tokenizer_and_ranking_examples() {
    let t = Tokenizer::with_stopwords(["now"]);
    assert_eq!(t.tokenize("Vote NOW!!!"), vec!["vote"]);
    assert!(t.tokenize("").is_empty());
    assert!(Tokenizer::with_stopwords(["the"]).tokenize("the the the").is_empty());
    assert_eq!(
        top_k(&["a", "b", "a", "c", "b", "a"], 3),
        vec![("a".into(), 3), ("b".into(), 2), ("c".into(), 1)]
    );
    assert_eq!(top_k(&["b", "a", "b", "a"], 1), vec![("a".into(), 2)]);
    assert!(top_k::<&str>(&[], 3).is_empty());
}

#[test]
fn tfidf_hand_values() {
    assert_eq!(tfidf(0, 2, 10), 0.0);
    assert_eq!(tfidf(5, 3, 3), 0.0);
    assert_eq!(tfidf(2, 1, 1), 0.0);
    assert!((tfidf(2, 1, 3) - 1.386_294_361_119_890_6).abs() < 1e-12);
}

fn context_of(view: &CorpusView, user: &str, stats: &CorpusStats, table: &botwatch_pipeline::embedding::EmbeddingTable) -> Vec<f64> {
    extract_context(view.tweets_of(user), stats, table, &Tokenizer::default())
}

#[test]
fn context_vectors_match_oracle_sheet() {
    let view = fixture_view("three_users.jsonl");
    let fitted = fit_statistics(&view, &FitConfig::default()).unwrap();
    let stats = &fitted.corpus_stats.value;
    let table = &fitted.embeddings.value;
    assert_eq!(stats.tweet.documents, 3);
    assert_eq!(stats.retweet.documents, 2);

    let names = context_names();
    let sheet = |cells: &[(&str, f64)], vectors: &[(&str, &str)]| -> Vec<f64> {
        let mut m: BTreeMap<String, f64> = cells.iter().map(|(n, v)| (n.to_string(), *v)).collect();
        for (prefix, term) in vectors {
            if let Some(v) = table.lookup(term) {
                for (d, x) in v.iter().enumerate() {
                    m.insert(format!("{prefix}_{d}"), *x);
                }
            }
        }
        names.iter().map(|n| m.get(n).copied().unwrap_or(f64::NAN)).collect()
    };
    let zero_stats = |s: &str| -> Vec<(String, f64)> {
        ["urls", "hashtags", "mentions"]
            .iter()
            .flat_map(|w| [(format!("{s}_number_of_{w}_avg"), 0.0), (format!("{s}_number_of_{w}_std"), 0.0)])
            .collect()
    };

    // user 1: one tweet with #coffee, one retweet "RT match"
    let mut cells: Vec<(String, f64)> = zero_stats("tweet");
    cells.extend(zero_stats("retweet"));
    cells.retain(|(n, _)| n != "tweet_number_of_hashtags_avg");
    cells.push(("tweet_number_of_hashtags_avg".into(), 1.0));
    cells.push(("N1_tweet_hashtags_tfidf".into(), 2f64.ln()));
    let cells_ref: Vec<(&str, f64)> = cells.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let want = sheet(
        &cells_ref,
        &[
            ("N1_tweet_hashtags_word", "#coffee"),
            ("N1_tweet_word", "coffee"),
            ("N2_tweet_word", "morning"),
            ("N1_retweet_word", "match"),
        ],
    );
    assert!(table.lookup("match").is_some(), "match occurs twice");
    assert_same(&context_of(&view, "1", stats, table), &want, &names);

    // user 3: one tweet mentioning anna_berg, no retweets
    let mut cells: Vec<(String, f64)> = zero_stats("tweet");
    cells.retain(|(n, _)| n != "tweet_number_of_mentions_avg");
    cells.push(("tweet_number_of_mentions_avg".into(), 1.0));
    cells.push(("N1_tweet_mentioned_tfidf".into(), 2f64.ln()));
    let cells_ref: Vec<(&str, f64)> = cells.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let want = sheet(
        &cells_ref,
        &[
            ("N1_tweet_mentioned_word", "@anna_berg"),
            ("N1_tweet_word", "great"),
            ("N2_tweet_word", "match"),
        ],
    );
    let got = context_of(&view, "3", stats, table);
    assert_same(&got, &want, &names);
    assert!(got[CONTEXT_DIM / 2..].iter().all(|v| v.is_nan()), "empty retweet stream is missing");
}

#[test]
fn url_count_statistics_use_population_std() {
    let t0 = ts("2020-09-01T00:00:00Z");
    let mut a = post("1", t0);
    a.urls = vec!["http://x".into(), "http://y".into()];
    let b = post("2", t0 + Duration::hours(1));
    let view = CorpusView::new(vec![AccountRecord { user_id: "u".into(), ..blank_account_at(t0) }], vec![a.clone(), b.clone()], win(t0, 2), t0 + Duration::days(2)).unwrap();
    let stats = fit_corpus_stats(&view);
    let table = train_embeddings(&[vec!["w".into(), "w".into()]], &EmbeddingConfig::default()).unwrap();
    let f = extract_context(&[a, b], &stats, &table, &Tokenizer::default());
    let idx = |n: &str| context_names().iter().position(|x| x == n).unwrap();
    assert_eq!(f[idx("tweet_number_of_urls_avg")], 1.0);
    assert_eq!(f[idx("tweet_number_of_urls_std")], 1.0);
}

fn blank_account_at(t: Timestamp) -> AccountRecord {
    AccountRecord {
        created_at: t - Duration::days(10),
        ..blank_account()
    }
}

fn win(start: Timestamp, days: i64) -> botwatch_pipeline::corpus::Window {
    botwatch_pipeline::corpus::Window::new(start, start + Duration::days(days)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn context_ignores_post_order(seed in any::<u64>()) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t0 = ts("2020-09-01T00:00:00Z");
        let tags = ["a", "b", "c", "d"];
        let mut posts: Vec<TweetRecord> = (0..rng.gen_range(1..12))
            .map(|i| {
                let mut p = post(&i.to_string(), t0 + Duration::minutes(i));
                p.hashtags = (0..rng.gen_range(0..3)).map(|_| tags[rng.gen_range(0..4)].to_string()).collect();
                p.mentions = (0..rng.gen_range(0..2)).map(|_| tags[rng.gen_range(0..4)].to_string()).collect();
                p.text = (0..rng.gen_range(0..5)).map(|_| ["red", "blue", "green"][rng.gen_range(0..3)]).collect::<Vec<_>>().join(" ");
                if rng.gen_bool(0.4) {
                    p.retweet = Some(RetweetRef { tweet_id: format!("o{i}"), author_id: "v".into(), created_at: p.created_at });
                }
                p
            })
            .collect();
        let view = CorpusView::new(vec![AccountRecord { user_id: "u".into(), ..blank_account_at(t0) }], posts.clone(), win(t0, 1), t0 + Duration::days(1)).unwrap();
        let stats = fit_corpus_stats(&view);
        let table = train_embeddings(&[vec!["red".into(), "blue".into(), "red".into(), "blue".into()]], &EmbeddingConfig::default()).unwrap();
        let tok = Tokenizer::default();
        let before = extract_context(&posts, &stats, &table, &tok);
        posts.shuffle(&mut rng);
        let after = extract_context(&posts, &stats, &table, &tok);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&before), bits(&after));
    }
}

// ---------- temporal ----------

#[test]
fn ten_timestamp_histogram() {
    // 2020-09-07 is a Monday
    let stamps: Vec<Timestamp> = [
        "2020-09-07T03:00:00Z",
        "2020-09-07T03:59:59Z",
        "2020-09-08T13:00:00Z",
        "2020-09-09T13:30:00Z",
        "2020-09-09T23:00:00Z",
        "2020-09-11T00:00:00Z",
        "2020-09-12T13:10:00Z",
        "2020-09-13T13:20:00Z",
        "2020-09-14T03:30:00Z",
        "2020-09-20T23:59:59Z",
    ]
    .iter()
    .map(|s| ts(s))
    .collect();
    let days = activity_shares(&stamps, Buckets::Weekday);
    assert_eq!(days, vec![0.3, 0.1, 0.2, 0.0, 0.1, 0.1, 0.2]);
    let hours = activity_shares(&stamps, Buckets::Hour);
    let mut want = vec![0.0; 24];
    want[0] = 0.1;
    want[3] = 0.3;
    want[13] = 0.4;
    want[23] = 0.2;
    assert_eq!(hours, want);
}

fn random_posts(seed: u64, t0: Timestamp) -> Vec<TweetRecord> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut posts: Vec<TweetRecord> = (0..rng.gen_range(0..30))
        .map(|i| {
            let at = t0 + Duration::seconds(rng.gen_range(0..14 * 86_400));
            let mut p = post(&i.to_string(), at);
            if rng.gen_bool(0.5) {
                p.retweet = Some(RetweetRef {
                    tweet_id: format!("o{i}"),
                    author_id: "v".into(),
                    created_at: at - Duration::seconds(rng.gen_range(0..10_000)),
                });
            }
            p
        })
        .collect();
    posts.sort_by_key(|p| p.created_at);
    posts
}

proptest! {
    #[test]
    fn weekly_shift_leaves_shares_unchanged(seed in any::<u64>()) {
        let t0 = ts("2020-09-01T00:00:00Z");
        let window = win(t0, 30);
        let posts = random_posts(seed, t0);
        let shifted: Vec<TweetRecord> = posts
            .iter()
            .map(|p| {
                let mut q = p.clone();
                q.created_at += Duration::days(7);
                if let Some(rt) = &mut q.retweet {
                    rt.created_at += Duration::days(7);
                }
                q
            })
            .collect();
        let a = extract_temporal(&posts, &window).unwrap();
        let b = extract_temporal(&shifted, &window).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));

        prop_assert_eq!(a.len(), TEMPORAL_DIM);
        for block in [0..7, 7..14, 14..21, 23..47, 47..71, 71..95] {
            let s = &a[block];
            if s.iter().all(|v| !v.is_nan()) {
                prop_assert!((s.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                prop_assert!(s.iter().all(|v| *v >= 0.0));
            }
        }
        let (mn, mx, avg) = (a[95], a[96], a[97]);
        if !mn.is_nan() {
            prop_assert!(mn <= avg + 1e-9 && avg <= mx + 1e-9);
        }
    }

    #[test]
    fn delays_ignore_order(seed in any::<u64>()) {
        let t0 = ts("2020-09-01T00:00:00Z");
        let window = win(t0, 30);
        let mut posts = random_posts(seed, t0);
        let a = extract_temporal(&posts, &window).unwrap();
        posts.reverse();
        let b = extract_temporal(&posts, &window).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn temporal_names_match_dimension() {
    assert_eq!(temporal_names().len(), TEMPORAL_DIM);
}

// ---------- graph ----------

#[test]
fn five_retweet_fixture() {
    let mut g = RetweetGraph::default();
    for (a, b) in [("a", "b"), ("a", "b"), ("b", "c"), ("c", "a"), ("d", "a")] {
        g.add_retweet(a, b);
    }
    let row = |u: &str| g.node_stats(u).to_array();
    assert_eq!(row("a"), [2.0, 1.0, 3.0, 2.0, 2.0, 4.0]);
    assert_eq!(row("b"), [1.0, 1.0, 2.0, 2.0, 1.0, 3.0]);
    assert_eq!(row("c"), [1.0, 1.0, 2.0, 1.0, 1.0, 2.0]);
    assert_eq!(row("d"), [0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
    assert_eq!(row("nobody"), [0.0; GRAPH_DIM]);
    assert_eq!(RetweetGraph::default().n_nodes(), 0);
}

#[test]
fn corpus_graph_keeps_external_authors() {
    let view = fixture_view("three_users.jsonl");
    let g = build_graph(&view);
    assert_eq!(g.weight("2", "900"), 1);
    assert_eq!(g.weight("1", "3"), 1);
    assert_eq!(g.n_nodes(), 4);
    assert_eq!(g.node_stats("3").in_degree, 1);
}

fn edge_events() -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..8, 0u8..8), 0..40)
}

proptest! {
    #[test]
    fn degrees_match_adjacency_matrix(events in edge_events()) {
        let n = 8;
        let mut w = vec![vec![0u64; n]; n];
        let mut g = RetweetGraph::default();
        for i in 0..n {
            g.add_node(&format!("n{i}"));
        }
        for &(a, b) in &events {
            w[a as usize][b as usize] += 1;
            g.add_retweet(&format!("n{a}"), &format!("n{b}"));
        }
        // binary adjacency; in-degree is A^T 1, out-degree is A 1
        let adj: Vec<Vec<u64>> = w.iter().map(|r| r.iter().map(|&x| u64::from(x > 0)).collect()).collect();
        let ones = vec![1u64; n];
        let mat_vec = |m: &Vec<Vec<u64>>, t: bool| -> Vec<u64> {
            (0..n).map(|i| (0..n).map(|j| if t { m[j][i] } else { m[i][j] } * ones[j]).sum()).collect()
        };
        let (ind, outd) = (mat_vec(&adj, true), mat_vec(&adj, false));
        let (win_, wout) = (mat_vec(&w, true), mat_vec(&w, false));
        let all = g.all_stats();
        for i in 0..n {
            let f = g.node_stats(&format!("n{i}"));
            prop_assert_eq!(f, all[format!("n{i}").as_str()]);
            prop_assert_eq!((f.in_degree, f.out_degree, f.weighted_in_degree, f.weighted_out_degree), (ind[i], outd[i], win_[i], wout[i]));
            prop_assert_eq!(f.degree, f.in_degree + f.out_degree);
            prop_assert_eq!(f.weighted_degree, f.weighted_in_degree + f.weighted_out_degree);
        }
        let sum = |k: fn(&botwatch_pipeline::graph::GraphFeatures) -> u64| all.values().map(k).sum::<u64>();
        prop_assert_eq!(sum(|f| f.in_degree), g.n_edges() as u64);
        prop_assert_eq!(sum(|f| f.out_degree), g.n_edges() as u64);
        prop_assert_eq!(sum(|f| f.weighted_in_degree), events.len() as u64);
        prop_assert_eq!(sum(|f| f.weighted_out_degree), events.len() as u64);
    }

    #[test]
    fn insertion_order_does_not_matter(mut events in edge_events()) {
        let build = |ev: &[(u8, u8)]| {
            let mut g = RetweetGraph::default();
            for (a, b) in ev {
                g.add_retweet(&a.to_string(), &b.to_string());
            }
            g
        };
        let g1 = build(&events);
        events.reverse();
        let g2 = build(&events);
        prop_assert_eq!(g1, g2);
    }
}

// ---------- assembly ----------

#[test]
fn full_extraction_has_335_slots() {
    let view = fixture_view("three_users.jsonl");
    let fitted = fit_statistics(&view, &FitConfig::default()).unwrap();
    let users: Vec<String> = view.user_ids().map(String::from).collect();
    let m = featurize(&view, &fitted, &users).unwrap();
    assert_eq!((m.n_rows(), m.n_cols()), (3, TOTAL_DIM));
    assert_eq!(m.values.len(), 3 * 335);
    let counts = m.spec.category_counts();
    let want: Vec<(String, usize)> = CATEGORIES.iter().map(|(c, n)| (c.to_string(), *n)).collect();
    assert_eq!(counts, want);
    assert_eq!(want.iter().map(|c| c.1).collect::<Vec<_>>(), vec![26, 204, 99, 6]);
    assert_eq!(m.spec, canonical_spec());
}

#[test]
fn unknown_users_are_rejected() {
    let view = fixture_view("three_users.jsonl");
    let fitted = fit_statistics(&view, &FitConfig::default()).unwrap();
    assert!(matches!(featurize(&view, &fitted, &["ghost".to_string()]), Err(FeaturizeError::UnknownUser(_))));
}

#[test]
fn matrices_round_trip_through_csv_and_are_deterministic() {
    let view = fixture_view("sept_oct.jsonl");
    let users: Vec<String> = view.user_ids().map(String::from).collect();
    let run = || {
        let fitted = fit_statistics(&view, &FitConfig::default()).unwrap();
        let mut m = featurize(&view, &fitted, &users).unwrap();
        m.set_labels(&[("1".to_string(), 1u8), ("3".to_string(), 0u8)].into());
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        (m, buf)
    };
    let (m, first) = run();
    let (_, second) = run();
    assert_eq!(first, second);
    let back = FeatureMatrix::read_csv(first.as_slice()).unwrap();
    assert_eq!(back.spec, m.spec);
    assert_eq!(back.user_ids, m.user_ids);
    assert_eq!(back.labels, vec![Some(1), None, Some(0)]);
    let bits = |v: &[f64]| v.iter().map(|x| if x.is_nan() { u64::MAX } else { x.to_bits() }).collect::<Vec<_>>();
    assert_eq!(bits(&back.values), bits(&m.values));
    assert_eq!(m.to_dataset().n_rows(), 2);
}

#[test]
fn leakage_check_compares_provenance() {
    let view = fixture_view("sept_oct.jsonl");
    let (sept, oct) = view.split_by_window(ts("2020-10-01T00:00:00Z")).unwrap();
    let on_sept = fit_statistics(&sept, &FitConfig::default()).unwrap().provenance();
    let on_oct = fit_statistics(&oct, &FitConfig::default()).unwrap().provenance();
    assert!(check_no_leakage(&on_sept, &sept.provenance(), &oct.digest()).is_ok());
    assert!(matches!(check_no_leakage(&on_oct, &sept.provenance(), &oct.digest()), Err(FeaturizeError::Leakage(_))));
    let mut mixed = on_sept.clone();
    mixed.embeddings = on_oct.embeddings.clone();
    assert!(check_no_leakage(&mixed, &sept.provenance(), &oct.digest()).is_err());
    let mut foreign = on_sept;
    foreign.bigram = view.provenance();
    assert!(check_no_leakage(&foreign, &sept.provenance(), &oct.digest()).is_err());
}
