//! Second-order gradient-boosted regression trees for binary classification.

mod grow;
pub mod objective;
pub mod tree;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::feature_spec::FeatureSpec;
use crate::scalar::{logit, sigmoid, Scalar};
use grow::{grow_tree, GrowParams, SortedColumns};
pub use objective::{leaf_weight, logistic_grad_hess, logloss, split_gain, ObjectiveError};
pub use tree::{Node, Tree};

pub const MODEL_FORMAT: &str = "botwatch-gbtree";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BoosterError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("feature mask selects no features")]
    EmptyMask,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unsupported model file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoosterConfig {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub num_rounds: usize,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub colsample: f64,
    /// Prior probability; `None` uses the training positive rate.
    pub base_score: Option<f64>,
    pub seed: u64,
}

impl Default for BoosterConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_depth: 6,
            num_rounds: 100,
            reg_lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample: 1.0,
            base_score: None,
            seed: 0,
        }
    }
}

impl BoosterConfig {
    pub fn validate(&self) -> Result<(), BoosterError> {
        let bad = |m: &str| Err(BoosterError::InvalidConfig(m.to_owned()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if self.reg_lambda < 0.0 || self.reg_lambda.is_nan() {
            return bad("reg_lambda must be >= 0");
        }
        if self.gamma < 0.0 || self.gamma.is_nan() {
            return bad("gamma must be >= 0");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1");
        }
        if self.min_child_weight < 0.0 || self.min_child_weight.is_nan() {
            return bad("min_child_weight must be >= 0");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad("colsample must be in (0, 1]");
        }
        if let Some(p) = self.base_score {
            if !(p > 0.0 && p < 1.0) {
                return bad("base_score must be in (0, 1)");
            }
        }
        Ok(())
    }
}

/// Additive tree model: `margin = base_margin + learning_rate * sum(tree outputs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct TreeEnsemble<T> {
    pub format: String,
    pub version: u32,
    pub base_margin: T,
    pub learning_rate: T,
    pub spec: FeatureSpec,
    pub config: BoosterConfig,
    pub trees: Vec<Tree<T>>,
}

impl<T: Scalar> TreeEnsemble<T> {
    pub fn new(spec: FeatureSpec, base_margin: T, learning_rate: T) -> Self {
        Self {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            base_margin,
            learning_rate,
            spec,
            config: BoosterConfig::default(),
            trees: Vec::new(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.spec.len()
    }

    fn check_dim(&self, row: &[T]) -> Result<(), BoosterError> {
        if row.len() != self.spec.len() {
            return Err(BoosterError::DimensionMismatch {
                expected: self.spec.len(),
                got: row.len(),
            });
        }
        Ok(())
    }

    /// Log-odds prediction without the dimension check.
    pub fn margin_unchecked(&self, row: &[T]) -> T {
        let sum: T = self.trees.iter().map(|t| t.predict(row)).sum();
        self.base_margin + self.learning_rate * sum
    }

    pub fn predict_margin(&self, row: &[T]) -> Result<T, BoosterError> {
        self.check_dim(row)?;
        Ok(self.margin_unchecked(row))
    }

    pub fn predict(&self, row: &[T]) -> Result<T, BoosterError> {
        self.predict_margin(row).map(sigmoid)
    }

    pub fn predict_dataset(&self, data: &Dataset<T>) -> Result<Vec<T>, BoosterError> {
        if data.n_cols() != self.spec.len() {
            return Err(BoosterError::DimensionMismatch {
                expected: self.spec.len(),
                got: data.n_cols(),
            });
        }
        Ok(data.rows().map(|r| sigmoid(self.margin_unchecked(r))).collect())
    }

    /// Total accepted gain per feature slot.
    pub fn gain_importance(&self) -> Vec<T> {
        let mut imp = vec![T::zero(); self.spec.len()];
        for tree in &self.trees {
            for node in &tree.nodes {
                if let Node::Split { feature, gain, .. } = node {
                    imp[*feature] = imp[*feature] + *gain;
                }
            }
        }
        imp
    }

    pub fn max_tree_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String, BoosterError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, BoosterError> {
        let model: Self = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(BoosterError::Format(format!("format `{}`", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(BoosterError::Format(format!("version {}", model.version)));
        }
        for tree in &model.trees {
            for f in tree.split_features() {
                if f >= model.spec.len() {
                    return Err(BoosterError::Format(format!("feature index {f} out of range")));
                }
            }
        }
        Ok(model)
    }
}

/// Per-round training diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport<T> {
    /// Mean training logloss before the first round and after each round.
    pub logloss: Vec<T>,
}

/// Fits `config.num_rounds` trees to `data` using only the active slots of `spec`.
pub fn train<T: Scalar>(
    data: &Dataset<T>,
    config: &BoosterConfig,
    spec: &FeatureSpec,
) -> Result<(TreeEnsemble<T>, TrainReport<T>), BoosterError> {
    config.validate()?;
    if data.n_cols() != spec.len() {
        return Err(BoosterError::DimensionMismatch {
            expected: spec.len(),
            got: data.n_cols(),
        });
    }
    if data.n_rows() < 2 {
        return Err(BoosterError::TooFewSamples(data.n_rows()));
    }
    if !data.has_both_classes() {
        return Err(BoosterError::SingleClass);
    }
    let active = spec.active_indices();
    if active.is_empty() {
        return Err(BoosterError::EmptyMask);
    }

    let n = data.n_rows();
    let prior = config
        .base_score
        .unwrap_or(data.positives() as f64 / n as f64);
    let base_margin = logit(T::lit(prior));
    let eta = T::lit(config.learning_rate);
    let mut model = TreeEnsemble::new(spec.clone(), base_margin, eta);
    model.config = config.clone();

    let sorted = SortedColumns::build(data, &active);
    let params = GrowParams {
        max_depth: config.max_depth,
        lambda: T::lit(config.reg_lambda),
        gamma: T::lit(config.gamma),
        min_child_weight: T::lit(config.min_child_weight),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut margins = vec![base_margin; n];
    let mut grad = vec![T::zero(); n];
    let mut hess = vec![T::zero(); n];
    let labels = data.labels();
    let mut report = TrainReport {
        logloss: vec![logloss(labels, &margins)],
    };

    let n_rows_sample = ((n as f64) * config.subsample).round().max(1.0) as usize;
    let n_cols_sample = ((active.len() as f64) * config.colsample).round().max(1.0) as usize;
    let mut row_order: Vec<usize> = (0..n).collect();
    let mut col_order = active.clone();
    let mut in_sample = vec![true; n];

    for _ in 0..config.num_rounds {
        for i in 0..n {
            let (g, h) = logistic_grad_hess(labels[i], margins[i]);
            grad[i] = g;
            hess[i] = h;
        }
        if n_rows_sample < n {
            row_order.shuffle(&mut rng);
            in_sample.iter_mut().for_each(|s| *s = false);
            for &r in &row_order[..n_rows_sample] {
                in_sample[r] = true;
            }
        }
        let features: Vec<usize> = if n_cols_sample < active.len() {
            col_order.shuffle(&mut rng);
            let mut f = col_order[..n_cols_sample].to_vec();
            f.sort_unstable();
            f
        } else {
            active.clone()
        };

        let tree = grow_tree(data, &sorted, &grad, &hess, &in_sample, &features, &params);
        for (i, m) in margins.iter_mut().enumerate() {
            *m = *m + eta * tree.predict(data.row(i));
        }
        model.trees.push(tree);
        report.logloss.push(logloss(labels, &margins));
    }
    Ok((model, report))
}

/// Threshold rule for importance-based selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum SelectionThreshold {
    /// Mean importance over all slots of the spec.
    #[default]
    Mean,
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub mask: Vec<bool>,
    pub threshold: f64,
    pub importance: Vec<f64>,
    pub retained: usize,
}

/// Keeps the slots whose total-gain importance reaches the threshold.
pub fn select_features<T: Scalar>(model: &TreeEnsemble<T>, rule: SelectionThreshold) -> Selection {
    let importance: Vec<f64> = model.gain_importance().into_iter().map(Scalar::as_f64).collect();
    let threshold = match rule {
        SelectionThreshold::Mean => {
            if importance.is_empty() {
                0.0
            } else {
                importance.iter().sum::<f64>() / importance.len() as f64
            }
        }
        SelectionThreshold::Absolute(v) => v,
    };
    let mask: Vec<bool> = importance.iter().map(|&v| v >= threshold).collect();
    let retained = mask.iter().filter(|&&m| m).count();
    Selection {
        mask,
        threshold,
        importance,
        retained,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize) -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i >= n / 2)).collect();
        Dataset::from_rows(&rows, &labels).unwrap()
    }

    #[test]
    fn zero_rounds_predicts_prior() {
        let data = separable(10);
        let cfg = BoosterConfig {
            num_rounds: 0,
            ..Default::default()
        };
        let (model, _) = train(&data, &cfg, &FeatureSpec::anonymous(1)).unwrap();
        for x in [-5.0, 3.0, 100.0, f64::NAN] {
            assert!((model.predict(&[x]).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_ensemble_and_stump_predictions() {
        let spec = FeatureSpec::anonymous(1);
        let mut model = TreeEnsemble::new(spec, 0.0f64, 1.0);
        assert_eq!(model.predict(&[0.3]).unwrap(), 0.5);
        model.trees.push(Tree::stump(0, 0.0, false, -2.0, 2.0));
        assert!((model.predict(&[1.0]).unwrap() - 0.880_797_077_977_882_3).abs() < 1e-12);
        // missing routes right by default direction
        assert!(model.predict(&[f64::NAN]).unwrap() > 0.5);
        assert!(matches!(
            model.predict(&[1.0, 2.0]),
            Err(BoosterError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn separable_fixture_fits_within_50_rounds() {
        let data = separable(40);
        let cfg = BoosterConfig {
            num_rounds: 50,
            learning_rate: 0.3,
            max_depth: 2,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let (model, report) = train(&data, &cfg, &FeatureSpec::anonymous(1)).unwrap();
        assert!(*report.logloss.last().unwrap() < 0.01, "{:?}", report.logloss.last());
        for w in report.logloss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(model.max_tree_depth() <= 2);
    }

    #[test]
    fn rejects_single_class_and_empty_mask() {
        let rows = vec![vec![1.0f64], vec![2.0]];
        let data = Dataset::from_rows(&rows, &[1, 1]).unwrap();
        let spec = FeatureSpec::anonymous(1);
        assert!(matches!(
            train(&data, &BoosterConfig::default(), &spec),
            Err(BoosterError::SingleClass)
        ));
        let data = Dataset::from_rows(&rows, &[0, 1]).unwrap();
        let masked = spec.with_mask(vec![false]).unwrap();
        assert!(matches!(
            train(&data, &BoosterConfig::default(), &masked),
            Err(BoosterError::EmptyMask)
        ));
    }

    #[test]
    fn learns_default_direction_for_missing() {
        // Positives have the feature missing; negatives have it present.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            rows.push(vec![i as f64]);
            labels.push(0);
            rows.push(vec![f64::NAN]);
            labels.push(1);
        }
        let data = Dataset::from_rows(&rows, &labels).unwrap();
        let cfg = BoosterConfig {
            num_rounds: 20,
            learning_rate: 0.5,
            max_depth: 1,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let (model, _) = train(&data, &cfg, &FeatureSpec::anonymous(1)).unwrap();
        assert!(model.predict(&[f64::NAN]).unwrap() > 0.9);
        assert!(model.predict(&[7.0]).unwrap() < 0.1);
    }

    #[test]
    fn selection_keeps_features_at_or_above_mean() {
        let spec = FeatureSpec::anonymous(3);
        let mut model = TreeEnsemble::new(spec, 0.0f64, 1.0);
        let mut t = Tree::stump(1, 0.5, true, -1.0, 1.0);
        if let Node::Split { gain, .. } = &mut t.nodes[0] {
            *gain = 3.0;
        }
        model.trees.push(t);
        let sel = select_features(&model, SelectionThreshold::Mean);
        assert_eq!(sel.mask, vec![false, true, false]);
        assert_eq!(sel.retained, 1);
        assert_eq!(sel.threshold, 1.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let data = separable(30);
        let cfg = BoosterConfig {
            num_rounds: 5,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let (model, _) = train(&data, &cfg, &FeatureSpec::anonymous(1)).unwrap();
        let back = TreeEnsemble::<f64>::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        assert!(TreeEnsemble::<f64>::from_json(&model.to_json().unwrap().replace(MODEL_FORMAT, "other")).is_err());
    }

    #[test]
    fn trains_in_single_precision() {
        let rows: Vec<Vec<f32>> = (0..30).map(|i| vec![i as f32, (i % 3) as f32]).collect();
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i >= 15)).collect();
        let data = Dataset::from_rows(&rows, &labels).unwrap();
        let cfg = BoosterConfig {
            num_rounds: 20,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let (model, _) = train(&data, &cfg, &FeatureSpec::anonymous(2)).unwrap();
        assert!(model.predict(&[29.0, 2.0]).unwrap() > 0.8);
        assert!(model.predict(&[0.0, 0.0]).unwrap() < 0.2);
    }
}
