use botwatch_core::data::Dataset;
use botwatch_core::resample::{resample, smote, tomek_links, Standardizer};
use botwatch_core::{ResampleConfig, TomekRemoval};
use proptest::prelude::*;

fn points() -> impl Strategy<Value = Vec<(f64, f64, u8)>> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, 0u8..2), 6..30)
        .prop_filter("two minority", |v| {
            let pos = v.iter().filter(|p| p.2 == 1).count();
            pos >= 2 && v.len() - pos >= 2
        })
}

fn dataset(pts: &[(f64, f64, u8)]) -> Dataset<f64> {
    let rows: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0, p.1]).collect();
    let labels: Vec<u8> = pts.iter().map(|p| p.2).collect();
    Dataset::from_rows(&rows, &labels).unwrap()
}

proptest! {
    #[test]
    fn synthetic_rows_lie_on_their_segment(pts in points(), seed in 0u64..1000) {
        let data = dataset(&pts);
        let minority_idx: Vec<usize> = (0..data.n_rows()).filter(|&i| data.labels()[i] == 1).collect();
        let minority = data.subset(&minority_idx);
        let space = Standardizer::fit(&data);
        let cfg = ResampleConfig { seed, ..Default::default() };
        let out = smote(&minority, 25, &space, &cfg, 1000).unwrap();
        for (row, o) in out.rows.iter().zip(&out.origins) {
            prop_assert!((0.0..1.0).contains(&o.lambda));
            prop_assert_ne!(o.base_id, o.neighbor_id);
            let x = data.row(o.base_id as usize);
            let n = data.row(o.neighbor_id as usize);
            for d in 0..2 {
                let expect = x[d] + o.lambda * (n[d] - x[d]);
                prop_assert!((row[d] - expect).abs() <= 1e-12);
                let (lo, hi) = if x[d] <= n[d] { (x[d], n[d]) } else { (n[d], x[d]) };
                prop_assert!(row[d] >= lo - 1e-12 && row[d] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn smote_ignores_input_order(pts in points(), seed in 0u64..100) {
        let data = dataset(&pts);
        let minority_idx: Vec<usize> = (0..data.n_rows()).filter(|&i| data.labels()[i] == 1).collect();
        let mut reversed = minority_idx.clone();
        reversed.reverse();
        let space = Standardizer::fit(&data);
        let cfg = ResampleConfig { seed, ..Default::default() };
        let a = smote(&data.subset(&minority_idx), 10, &space, &cfg, 500).unwrap();
        let b = smote(&data.subset(&reversed), 10, &space, &cfg, 500).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn majority_only_cleaning_keeps_every_minority_original(pts in points(), seed in 0u64..100) {
        let data = dataset(&pts);
        let cfg = ResampleConfig { seed, tomek: TomekRemoval::MajorityOnly, ..Default::default() };
        let out = resample(&data, &cfg).unwrap();
        let min = out.minority_label;
        for i in 0..data.n_rows() {
            if data.labels()[i] == min {
                prop_assert!(!out.removed_ids.contains(&data.id(i)));
            }
        }
        for i in 0..out.data.n_rows() {
            if out.data.is_synthetic(i) {
                prop_assert_eq!(out.data.labels()[i], min);
            }
        }
    }

    #[test]
    fn tomek_pairs_are_mutual_opposite_class_neighbors(pts in points()) {
        let data = dataset(&pts);
        let space = Standardizer::fit(&data);
        let z: Vec<Vec<f64>> = (0..data.n_rows()).map(|i| space.transform(data.row(i))).collect();
        let nearest = |i: usize| -> usize {
            (0..z.len())
                .filter(|&j| j != i)
                .min_by(|&a, &b| {
                    let da: f64 = z[i].iter().zip(&z[a]).map(|(p, q)| (p - q).powi(2)).sum();
                    let db: f64 = z[i].iter().zip(&z[b]).map(|(p, q)| (p - q).powi(2)).sum();
                    da.partial_cmp(&db).unwrap().then(data.id(a).cmp(&data.id(b)))
                })
                .unwrap()
        };
        let links = tomek_links(&data, &space);
        for &(a, b) in &links {
            prop_assert!(data.labels()[a] != data.labels()[b]);
            prop_assert_eq!(nearest(a), b);
            prop_assert_eq!(nearest(b), a);
        }
        for a in 0..data.n_rows() {
            let b = nearest(a);
            if nearest(b) == a && data.labels()[a] != data.labels()[b] {
                prop_assert!(links.contains(&(a.min(b), a.max(b))));
            }
        }
    }
}

#[test]
fn one_dimensional_interpolation_is_linear_in_lambda() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
    let data = Dataset::from_rows(&rows, &[1; 10]).unwrap();
    let space = Standardizer::fit(&data);
    let cfg = ResampleConfig { seed: 7, ..Default::default() };
    let out = smote(&data, 200, &space, &cfg, 100).unwrap();
    for (row, o) in out.rows.iter().zip(&out.origins) {
        let (b, n) = (o.base_id as f64, o.neighbor_id as f64);
        assert!(((row[0] - b) / (n - b) - o.lambda).abs() < 1e-12);
    }
}

#[test]
fn missing_pattern_follows_the_base_row() {
    let rows = vec![vec![f64::NAN, 1.0], vec![2.0, 2.0], vec![3.0, f64::NAN], vec![4.0, 0.0]];
    let data = Dataset::from_rows(&rows, &[1, 1, 1, 1]).unwrap();
    let space = Standardizer::fit(&data);
    let out = smote(&data, 40, &space, &ResampleConfig::default(), 10).unwrap();
    for (row, o) in out.rows.iter().zip(&out.origins) {
        let base = data.row(o.base_id as usize);
        for d in 0..2 {
            assert_eq!(row[d].is_nan(), base[d].is_nan());
        }
    }
}
