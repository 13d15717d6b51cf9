use botwatch_core::booster::{train, TreeEnsemble};
use botwatch_core::data::Dataset;
use botwatch_core::{BoosterConfig, FeatureSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy_dataset(seed: u64, n: usize, d: usize) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d)
            .map(|_| if rng.gen_bool(0.05) { f64::NAN } else { rng.gen_range(-3.0..3.0) })
            .collect();
        let signal = row[0].max(-3.0) * 1.5 - row[1].max(-3.0) + rng.gen_range(-1.5..1.5);
        labels.push(u8::from(signal > 0.0 || (row[0].is_nan() && rng.gen_bool(0.5))));
        rows.push(row);
    }
    Dataset::from_rows(&rows, &labels).unwrap()
}

#[test]
fn training_loss_never_increases_over_200_rounds() {
    let data = noisy_dataset(3, 300, 5);
    let cfg = BoosterConfig {
        num_rounds: 200,
        max_depth: 3,
        ..Default::default()
    };
    let (_, report) = train(&data, &cfg, &FeatureSpec::anonymous(5)).unwrap();
    assert_eq!(report.logloss.len(), 201);
    for w in report.logloss.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn training_is_deterministic_and_round_trips() {
    let data = noisy_dataset(9, 200, 4);
    let cfg = BoosterConfig {
        num_rounds: 30,
        subsample: 0.8,
        colsample: 0.75,
        seed: 42,
        ..Default::default()
    };
    let spec = FeatureSpec::anonymous(4);
    let (a, _) = train(&data, &cfg, &spec).unwrap();
    let (b, _) = train(&data, &cfg, &spec).unwrap();
    let text = a.to_json().unwrap();
    assert_eq!(text, b.to_json().unwrap());
    let back = TreeEnsemble::<f64>::from_json(&text).unwrap();
    assert_eq!(back.to_json().unwrap(), text);
    for row in data.rows() {
        assert_eq!(a.predict_margin(row).unwrap().to_bits(), back.predict_margin(row).unwrap().to_bits());
    }
}

#[test]
fn masked_features_are_never_split_on() {
    let data = noisy_dataset(1, 200, 4);
    let spec = FeatureSpec::anonymous(4).with_mask(vec![false, true, true, false]).unwrap();
    let (model, _) = train(&data, &BoosterConfig { num_rounds: 20, ..Default::default() }, &spec).unwrap();
    for tree in &model.trees {
        assert!(tree.split_features().all(|f| f == 1 || f == 2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Splits depend only on the ordering of each column.
    #[test]
    fn predictions_are_invariant_to_positive_rescaling(seed in 0u64..500, scale in 0.01f64..100.0) {
        let data = noisy_dataset(seed, 80, 3);
        let mut scaled = data.clone();
        scaled.scale_column(0, scale);
        let cfg = BoosterConfig { num_rounds: 10, max_depth: 3, ..Default::default() };
        let spec = FeatureSpec::anonymous(3);
        let (a, _) = train(&data, &cfg, &spec).unwrap();
        let (b, _) = train(&scaled, &cfg, &spec).unwrap();
        for i in 0..data.n_rows() {
            let pa = a.predict(data.row(i)).unwrap();
            let pb = b.predict(scaled.row(i)).unwrap();
            prop_assert!((pa - pb).abs() <= 1e-12);
        }
    }

    #[test]
    fn gain_importance_is_nonnegative_and_masked(seed in 0u64..500) {
        let data = noisy_dataset(seed, 60, 4);
        let spec = FeatureSpec::anonymous(4).with_mask(vec![true, true, false, true]).unwrap();
        let (model, _) = train(&data, &BoosterConfig { num_rounds: 5, ..Default::default() }, &spec).unwrap();
        let imp = model.gain_importance();
        prop_assert!(imp.iter().all(|&g| g >= 0.0));
        prop_assert_eq!(imp[2], 0.0);
    }
}
