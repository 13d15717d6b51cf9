//! Grid search over booster hyper-parameters by cross-validated ROC-AUC.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::booster::BoosterConfig;
use crate::data::Dataset;
use crate::evaluate::{kfold_with_folds, BoostPipeline, EvalError, MetricSummary};
use crate::feature_spec::FeatureSpec;
use crate::resample::ResampleConfig;
use crate::scalar::Scalar;
use crate::seed::derive_indexed;
use crate::split;

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("tuning grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Candidate values per hyper-parameter. Every combination is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub num_rounds: Vec<usize>,
    pub reg_lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub subsample: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            learning_rate: vec![0.05, 0.1, 0.3],
            max_depth: vec![3, 6, 10],
            num_rounds: vec![100, 300],
            reg_lambda: vec![1.0],
            gamma: vec![0.0],
            subsample: vec![0.8, 1.0],
        }
    }
}

impl Grid {
    pub fn singleton(cfg: &BoosterConfig) -> Self {
        Self {
            learning_rate: vec![cfg.learning_rate],
            max_depth: vec![cfg.max_depth],
            num_rounds: vec![cfg.num_rounds],
            reg_lambda: vec![cfg.reg_lambda],
            gamma: vec![cfg.gamma],
            subsample: vec![cfg.subsample],
        }
    }

    /// All combinations in lexicographic order of
    /// (learning_rate, max_depth, num_rounds, reg_lambda, gamma, subsample),
    /// each axis sorted ascending. Unlisted fields come from `base`.
    pub fn expand(&self, base: &BoosterConfig) -> Vec<BoosterConfig> {
        fn sorted_f(v: &[f64]) -> Vec<f64> {
            let mut v = v.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup();
            v
        }
        fn sorted_u(v: &[usize]) -> Vec<usize> {
            let mut v = v.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        }
        let mut out = Vec::new();
        for &learning_rate in &sorted_f(&self.learning_rate) {
            for &max_depth in &sorted_u(&self.max_depth) {
                for &num_rounds in &sorted_u(&self.num_rounds) {
                    for &reg_lambda in &sorted_f(&self.reg_lambda) {
                        for &gamma in &sorted_f(&self.gamma) {
                            for &subsample in &sorted_f(&self.subsample) {
                                out.push(BoosterConfig {
                                    learning_rate,
                                    max_depth,
                                    num_rounds,
                                    reg_lambda,
                                    gamma,
                                    subsample,
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub config: BoosterConfig,
    pub fold_roc_auc: Vec<f64>,
    pub mean_roc_auc: f64,
    pub summary: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub k: usize,
    pub entries: Vec<GridEntry>,
    pub best_index: usize,
    pub best: BoosterConfig,
}

/// Index of the winning entry: highest mean ROC-AUC, then fewer rounds, then
/// earlier grid position.
pub fn select_best(entries: &[GridEntry]) -> Option<usize> {
    (0..entries.len()).reduce(|best, i| {
        let (a, b) = (&entries[best], &entries[i]);
        if b.mean_roc_auc > a.mean_roc_auc
            || (b.mean_roc_auc == a.mean_roc_auc && b.config.num_rounds < a.config.num_rounds)
        {
            i
        } else {
            best
        }
    })
}

/// Evaluates every grid point on the same stratified folds, resampling only
/// the training folds.
pub fn tune<T: Scalar>(
    data: &Dataset<T>,
    grid: &Grid,
    base: &BoosterConfig,
    resample: Option<&ResampleConfig>,
    spec: &FeatureSpec,
    k: usize,
    seed: u64,
) -> Result<TuneReport, TuneError> {
    let configs = grid.expand(base);
    if configs.is_empty() {
        return Err(TuneError::EmptyGrid);
    }
    let folds = split::stratified_kfold(data.labels(), k, derive_indexed(seed, "tune-folds", 0))
        .map_err(EvalError::from)?;
    let mut entries = Vec::with_capacity(configs.len());
    for config in configs {
        let pipeline = BoostPipeline {
            booster: config.clone(),
            resample: resample.cloned(),
            spec: spec.clone(),
        };
        let cv = kfold_with_folds(data, &folds, &pipeline, seed, T::lit(0.5))?;
        let fold_roc_auc: Vec<f64> = cv.folds.iter().map(|f| f.metrics.roc_auc).collect();
        entries.push(GridEntry {
            config,
            mean_roc_auc: cv.summary.mean.roc_auc,
            fold_roc_auc,
            summary: cv.summary,
        });
    }
    let best_index = select_best(&entries).expect("non-empty grid");
    Ok(TuneReport {
        k,
        best: entries[best_index].config.clone(),
        best_index,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_36_points_in_lexicographic_order() {
        let cfgs = Grid::default().expand(&BoosterConfig::default());
        assert_eq!(cfgs.len(), 36);
        assert_eq!(cfgs[0].learning_rate, 0.05);
        assert_eq!((cfgs[0].max_depth, cfgs[0].num_rounds, cfgs[0].subsample), (3, 100, 0.8));
        assert_eq!((cfgs[1].subsample, cfgs[2].num_rounds), (1.0, 300));
        assert_eq!(cfgs[35].learning_rate, 0.3);
    }

    fn entry(rounds: usize, mean: f64) -> GridEntry {
        GridEntry {
            config: BoosterConfig {
                num_rounds: rounds,
                ..Default::default()
            },
            fold_roc_auc: vec![mean],
            mean_roc_auc: mean,
            summary: MetricSummary::of(&[]),
        }
    }

    #[test]
    fn ties_prefer_fewer_rounds_then_grid_order() {
        assert_eq!(select_best(&[entry(300, 0.9), entry(100, 0.9)]), Some(1));
        assert_eq!(select_best(&[entry(100, 0.9), entry(100, 0.9)]), Some(0));
        assert_eq!(select_best(&[entry(100, 0.8), entry(300, 0.9)]), Some(1));
        assert_eq!(select_best(&[]), None);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let grid = Grid {
            learning_rate: vec![],
            ..Default::default()
        };
        let data = Dataset::from_rows(&[vec![0.0f64], vec![1.0]], &[0, 1]).unwrap();
        let err = tune(&data, &grid, &BoosterConfig::default(), None, &FeatureSpec::anonymous(1), 2, 0);
        assert!(matches!(err, Err(TuneError::EmptyGrid)));
    }
}
