use botwatch_pipeline::corpus::{parse_timestamp, Provenance, Window};
use botwatch_pipeline::embedding::{sgns_loss_grad, train_embeddings, EmbeddingConfig, EmbeddingError, EmbeddingTable, EMBEDDING_DIM};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

type V = [f64; EMBEDDING_DIM];

fn log_sigmoid(x: f64) -> f64 {
    -(1.0 + (-x).exp()).ln()
}

fn dot(a: &V, b: &V) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Skip-gram negative-sampling loss written out directly.
fn oracle_loss(center: &V, context: &V, negatives: &[V]) -> f64 {
    -log_sigmoid(dot(context, center)) - negatives.iter().map(|u| log_sigmoid(-dot(u, center))).sum::<f64>()
}

fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-7 {
        (a - n).abs()
    } else {
        (a - n).abs() / scale
    }
}

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> V {
    std::array::from_fn(|_| rng.gen_range(-scale..scale))
}

/// Central differences of `f` along every coordinate of `x`.
fn numeric_grad(x: &V, f: impl Fn(&V) -> f64) -> V {
    let h = 1e-5;
    std::array::from_fn(|d| {
        let mut up = *x;
        let mut down = *x;
        up[d] += h;
        down[d] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let scale = rng.gen_range(0.1..2.0);
        let center = random_vec(&mut rng, scale);
        let context = random_vec(&mut rng, scale);
        let negatives: Vec<V> = (0..rng.gen_range(0..7)).map(|_| random_vec(&mut rng, scale)).collect();
        let g = sgns_loss_grad(&center, &context, &negatives);
        assert!((g.loss - oracle_loss(&center, &context, &negatives)).abs() < 1e-12);

        let nc = numeric_grad(&center, |c| oracle_loss(c, &context, &negatives));
        let no = numeric_grad(&context, |o| oracle_loss(&center, o, &negatives));
        for d in 0..EMBEDDING_DIM {
            worst = worst.max(rel_err(g.center[d], nc[d])).max(rel_err(g.context[d], no[d]));
        }
        for k in 0..negatives.len() {
            let nk = numeric_grad(&negatives[k], |u| {
                let mut negs = negatives.clone();
                negs[k] = *u;
                oracle_loss(&center, &context, &negs)
            });
            for d in 0..EMBEDDING_DIM {
                worst = worst.max(rel_err(g.negatives[k][d], nk[d]));
            }
        }
    }
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

fn sentences(spec: &[(&[&str], usize)]) -> Vec<Vec<String>> {
    spec.iter()
        .flat_map(|(words, n)| std::iter::repeat_n(words.iter().map(|w| w.to_string()).collect::<Vec<_>>(), *n))
        .collect()
}

fn cosine(a: &V, b: &V) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

#[test]
fn co_occurring_terms_end_up_closer() {
    // p and q share contexts; r lives in a disjoint vocabulary
    let corpus = sentences(&[
        (&["p", "x", "y"], 80),
        (&["q", "x", "y"], 80),
        (&["r", "z", "w"], 80),
        (&["p", "q", "x"], 40),
    ]);
    let cfg = EmbeddingConfig {
        epochs: 20,
        window: 2,
        min_count: 1,
        seed: 5,
        ..EmbeddingConfig::default()
    };
    let t = train_embeddings(&corpus, &cfg).unwrap();
    let (p, q, r) = (t.lookup("p").unwrap(), t.lookup("q").unwrap(), t.lookup("r").unwrap());
    assert!(cosine(p, q) > cosine(p, r), "pq {} pr {}", cosine(p, q), cosine(p, r));
}

#[test]
fn training_is_reproducible_and_seed_sensitive() {
    let corpus = sentences(&[(&["a", "b", "c", "d"], 30), (&["b", "e", "a"], 20)]);
    let cfg = EmbeddingConfig {
        min_count: 1,
        ..EmbeddingConfig::default()
    };
    let a = train_embeddings(&corpus, &cfg).unwrap();
    let b = train_embeddings(&corpus, &cfg).unwrap();
    assert_eq!(a, b);
    let bits = |t: &EmbeddingTable| -> Vec<u64> { t.terms().iter().flat_map(|w| t.lookup(w).unwrap().map(f64::to_bits)).collect() };
    assert_eq!(bits(&a), bits(&b));
    let c = train_embeddings(&corpus, &EmbeddingConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn vocabulary_filtering_and_lookup() {
    let corpus = sentences(&[(&["common", "word"], 3), (&["rare"], 1)]);
    let t = train_embeddings(&corpus, &EmbeddingConfig::default()).unwrap();
    assert!(t.lookup("common").is_some());
    assert!(t.lookup("rare").is_none(), "below min_count");
    assert!(t.lookup("never-seen").is_none());
    assert_eq!(t.lookup("word").unwrap().len(), EMBEDDING_DIM);
    assert!(matches!(
        train_embeddings(&sentences(&[(&["once"], 1)]), &EmbeddingConfig::default()),
        Err(EmbeddingError::EmptyVocabulary(2))
    ));
}

#[test]
fn epoch_loss_decreases_at_small_learning_rate() {
    // interleaved so the running epoch mean is not dominated by the
    // in-block adaptation that sorted sentence blocks would reward
    let corpus: Vec<Vec<String>> = (0..2000)
        .map(|i| {
            let words: &[&str] = match i % 5 {
                0 | 1 => &["a", "b", "c"],
                2 | 3 => &["c", "d", "e"],
                _ => &["a", "e"],
            };
            words.iter().map(|w| w.to_string()).collect()
        })
        .collect();
    let cfg = EmbeddingConfig {
        learning_rate: 0.0005,
        epochs: 10,
        min_count: 1,
        ..EmbeddingConfig::default()
    };
    let t = train_embeddings(&corpus, &cfg).unwrap();
    let losses = t.epoch_losses();
    assert_eq!(losses.len(), 10);
    for w in losses.windows(2) {
        assert!(w[1] <= w[0], "{losses:?}");
    }
}

#[test]
fn text_format_round_trip() {
    let corpus = sentences(&[(&["#tag", "@someone", "café", "x"], 5)]);
    let t = train_embeddings(&corpus, &EmbeddingConfig::default()).unwrap();
    let w = Window::new(parse_timestamp("2020-09-01T00:00:00Z").unwrap(), parse_timestamp("2020-10-01T00:00:00Z").unwrap()).unwrap();
    let prov = Provenance {
        corpus_digest: "d".repeat(64),
        window: w,
    };
    let text = t.to_text(&prov).unwrap();
    let (back, p) = EmbeddingTable::from_text(&text).unwrap();
    assert_eq!(back, t);
    assert_eq!(p, prov);
    assert!(EmbeddingTable::from_text("not an embedding file").is_err());
}
