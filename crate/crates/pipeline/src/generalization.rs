//! Train on one time window, evaluate on a later one.
//!
//! All corpus statistics are fitted on the training view only. The feature
//! matrices carry the provenance of the statistics that produced them, and
//! every matrix is checked against the training view before it is used.

use std::collections::{BTreeMap, BTreeSet};

use botwatch_core::data::Dataset;
use botwatch_core::evaluate::{score_fold, BoostPipeline, EvalError};
use botwatch_core::metrics::{CurvePoint, RunMetrics};
use botwatch_core::seed::derive_seed;
use botwatch_core::split::{stratified_split, SplitError};
use botwatch_core::{BoosterConfig, ResampleConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusView, Provenance, Timestamp};
use crate::featurize::{check_no_leakage, FeatureMatrix, FeaturePipeline, FeaturizeError};

#[derive(Debug, Error)]
pub enum GeneralizationError {
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("training window ends at {train_end}, after the test window starts at {test_start}")]
    OverlappingWindows { train_end: Timestamp, test_start: Timestamp },
    #[error("feature matrix has no statistics provenance")]
    MissingProvenance,
    #[error("invalid train fraction {0}")]
    InvalidFraction(f64),
    #[error("no labeled test-window users outside the training part")]
    EmptyCrossWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneralizationConfig {
    pub train_fraction: f64,
    pub threshold: f64,
    pub booster: BoosterConfig,
    pub resample: Option<ResampleConfig>,
    pub seed: u64,
}

impl Default for GeneralizationConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            threshold: 0.5,
            booster: BoosterConfig::default(),
            resample: Some(ResampleConfig::default()),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub train: Provenance,
    pub test: Provenance,
    pub n_train: usize,
    pub n_in_window_test: usize,
    pub n_cross_window_test: usize,
    /// Held-out part of the training window.
    pub in_window: RunMetrics,
    /// Labeled users of the test window that were not trained on.
    pub cross_window: RunMetrics,
    pub cross_window_roc_curve: Vec<CurvePoint>,
    pub cross_window_pr_curve: Vec<CurvePoint>,
}

fn guarded(
    matrix: &FeatureMatrix,
    train: &Provenance,
    test_digest: &str,
) -> Result<(), GeneralizationError> {
    let used = matrix.provenance.as_ref().ok_or(GeneralizationError::MissingProvenance)?;
    check_no_leakage(used, train, test_digest)?;
    Ok(())
}

fn labeled_users(view: &CorpusView, labels: &BTreeMap<String, u8>, exclude: &BTreeSet<String>) -> Vec<String> {
    view.user_ids()
        .filter(|u| labels.contains_key(*u) && !exclude.contains(*u))
        .map(str::to_string)
        .collect()
}

/// Fits statistics and a model on `train_view`, scores its held-out part
/// and every labeled user of `test_view` not used for training.
pub fn temporal_generalization(
    train_view: &CorpusView,
    test_view: &CorpusView,
    labels: &BTreeMap<String, u8>,
    pipeline: &dyn FeaturePipeline,
    config: &GeneralizationConfig,
) -> Result<GeneralizationReport, GeneralizationError> {
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(GeneralizationError::InvalidFraction(config.train_fraction));
    }
    let (tw, vw) = (train_view.window(), test_view.window());
    if tw.end > vw.start {
        return Err(GeneralizationError::OverlappingWindows {
            train_end: tw.end,
            test_start: vw.start,
        });
    }
    let train_prov = train_view.provenance();
    let test_prov = test_view.provenance();
    let test_digest = test_prov.corpus_digest.as_str();

    let fitted = pipeline.fit(train_view)?;
    check_no_leakage(&fitted.provenance(), &train_prov, test_digest)?;

    let train_users = labeled_users(train_view, labels, &BTreeSet::new());
    let mut train_matrix = pipeline.featurize(train_view, &fitted, &train_users)?;
    guarded(&train_matrix, &train_prov, test_digest)?;
    train_matrix.set_labels(labels);
    let all = train_matrix.to_dataset();

    let parts = stratified_split(
        all.labels(),
        &[config.train_fraction, 1.0 - config.train_fraction],
        derive_seed(config.seed, "generalization-split"),
    )?;
    let fit_part = all.subset(&parts[0]);
    let held_out = all.subset(&parts[1]);
    let trained_on: BTreeSet<String> = fit_part.ids().iter().map(|&i| train_users[i as usize].clone()).collect();

    let cross_users = labeled_users(test_view, labels, &trained_on);
    if cross_users.is_empty() {
        return Err(GeneralizationError::EmptyCrossWindow);
    }
    let mut test_matrix = pipeline.featurize(test_view, &fitted, &cross_users)?;
    guarded(&test_matrix, &train_prov, test_digest)?;
    test_matrix.set_labels(labels);
    let cross: Dataset<f64> = test_matrix.to_dataset();

    let model = BoostPipeline {
        booster: config.booster.clone(),
        resample: config.resample.clone(),
        spec: train_matrix.spec.clone(),
    };
    let seed = derive_seed(config.seed, "generalization-fit");
    let (_, in_window) = score_fold(&model, &fit_part, &held_out, seed, config.threshold)?;
    let (scores, cross_window) = score_fold(&model, &fit_part, &cross, seed, config.threshold)?;

    Ok(GeneralizationReport {
        train: train_prov,
        test: test_prov,
        n_train: fit_part.n_rows(),
        n_in_window_test: held_out.n_rows(),
        n_cross_window_test: cross.n_rows(),
        in_window,
        cross_window,
        cross_window_roc_curve: botwatch_core::metrics::roc_curve(&scores, cross.labels()).map_err(EvalError::from)?,
        cross_window_pr_curve: botwatch_core::metrics::pr_curve(&scores, cross.labels()).map_err(EvalError::from)?,
    })
}
