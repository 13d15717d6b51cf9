//! Cross-validation and the repeated hold-out protocol.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::booster::{self, BoosterConfig, BoosterError};
use crate::data::Dataset;
use crate::feature_spec::FeatureSpec;
use crate::metrics::{self, CurvePoint, MetricError, RunMetrics};
use crate::resample::{self, ResampleConfig, ResampleError};
use crate::scalar::Scalar;
use crate::seed::derive_indexed;
use crate::split::{self, SplitError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Booster(#[from] BoosterError),
    #[error(transparent)]
    Resample(#[from] ResampleError),
    #[error("fold {0} lacks one of the classes")]
    DegenerateFold(usize),
    #[error("leakage: {0}")]
    Leakage(String),
    #[error("pipeline returned {got} scores for {expected} rows")]
    ScoreCount { expected: usize, got: usize },
}

/// A trainable scorer evaluated by cross-validation. Implementations may
/// transform the training fold (e.g. resample it) but only ever see the
/// evaluation fold read-only.
pub trait FoldPipeline<T: Scalar>: Sync {
    fn fit_predict(&self, train: &Dataset<T>, eval: &Dataset<T>, seed: u64) -> Result<Vec<T>, EvalError>;
}

/// Resample the training fold, fit a boosted ensemble, score the evaluation fold.
#[derive(Debug, Clone)]
pub struct BoostPipeline {
    pub booster: BoosterConfig,
    pub resample: Option<ResampleConfig>,
    pub spec: FeatureSpec,
}

impl<T: Scalar> FoldPipeline<T> for BoostPipeline {
    fn fit_predict(&self, train: &Dataset<T>, eval: &Dataset<T>, seed: u64) -> Result<Vec<T>, EvalError> {
        let fitted = match &self.resample {
            Some(cfg) => {
                let cfg = ResampleConfig {
                    seed,
                    ..cfg.clone()
                };
                resample::resample(train, &cfg)?.data
            }
            None => train.clone(),
        };
        let cfg = BoosterConfig {
            seed,
            ..self.booster.clone()
        };
        let (model, _) = booster::train(&fitted, &cfg, &self.spec)?;
        Ok(model.predict_dataset(eval)?)
    }
}

impl<T: Scalar, F> FoldPipeline<T> for F
where
    F: Fn(&Dataset<T>, &Dataset<T>, u64) -> Result<Vec<T>, EvalError> + Sync,
{
    fn fit_predict(&self, train: &Dataset<T>, eval: &Dataset<T>, seed: u64) -> Result<Vec<T>, EvalError> {
        self(train, eval, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: RunMetrics,
    pub std: RunMetrics,
}

impl MetricSummary {
    /// Mean and population standard deviation per metric.
    pub fn of(runs: &[RunMetrics]) -> Self {
        let n = runs.len().max(1) as f64;
        let mut mean = [0.0; 5];
        for r in runs {
            for (m, v) in mean.iter_mut().zip(r.as_array()) {
                *m += v / n;
            }
        }
        let mut var = [0.0; 5];
        for r in runs {
            for ((s, v), m) in var.iter_mut().zip(r.as_array()).zip(mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        Self {
            mean: RunMetrics::from_array(mean),
            std: RunMetrics::from_array(var.map(f64::sqrt)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub valid_positives: usize,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub summary: MetricSummary,
}

fn guard_eval_fold<T: Scalar>(eval: &Dataset<T>) -> Result<(), EvalError> {
    if eval.synthetic_count() > 0 {
        return Err(EvalError::Leakage(format!(
            "{} synthetic rows in an evaluation fold",
            eval.synthetic_count()
        )));
    }
    Ok(())
}

/// Fits on `train` and scores `eval`, refusing synthetic evaluation rows.
pub fn score_fold<T: Scalar>(
    pipeline: &dyn FoldPipeline<T>,
    train: &Dataset<T>,
    eval: &Dataset<T>,
    seed: u64,
    threshold: T,
) -> Result<(Vec<T>, RunMetrics), EvalError> {
    guard_eval_fold(eval)?;
    let scores = pipeline.fit_predict(train, eval, seed)?;
    if scores.len() != eval.n_rows() {
        return Err(EvalError::ScoreCount {
            expected: eval.n_rows(),
            got: scores.len(),
        });
    }
    let m = RunMetrics::compute(&scores, eval.labels(), threshold)?;
    Ok((scores, m))
}

/// Stratified k-fold cross-validation; folds run in parallel and are
/// reported in fold order.
pub fn kfold_cv<T: Scalar>(
    data: &Dataset<T>,
    k: usize,
    pipeline: &dyn FoldPipeline<T>,
    seed: u64,
    threshold: T,
) -> Result<CvReport, EvalError> {
    let folds = split::stratified_kfold(data.labels(), k, derive_indexed(seed, "kfold", 0))?;
    kfold_with_folds(data, &folds, pipeline, seed, threshold)
}

/// Cross-validation over precomputed validation folds.
pub fn kfold_with_folds<T: Scalar>(
    data: &Dataset<T>,
    folds: &[Vec<usize>],
    pipeline: &dyn FoldPipeline<T>,
    seed: u64,
    threshold: T,
) -> Result<CvReport, EvalError> {
    let results: Vec<FoldResult> = folds
        .par_iter()
        .enumerate()
        .map(|(i, valid_idx)| {
            let train_idx = split::complement(data.n_rows(), valid_idx);
            let train = data.subset(&train_idx);
            let valid = data.subset(valid_idx);
            if !train.has_both_classes() || !valid.has_both_classes() {
                return Err(EvalError::DegenerateFold(i));
            }
            let (_, metrics) = score_fold(pipeline, &train, &valid, derive_indexed(seed, "fold", i as u64), threshold)?;
            Ok(FoldResult {
                fold: i,
                n_train: train.n_rows(),
                n_valid: valid.n_rows(),
                valid_positives: valid.positives(),
                metrics,
            })
        })
        .collect::<Result<_, _>>()?;
    let summary = MetricSummary::of(&results.iter().map(|r| r.metrics).collect::<Vec<_>>());
    Ok(CvReport {
        k: folds.len(),
        folds: results,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    /// Hold-out share of every stratified train/test split.
    pub test_fraction: f64,
    pub k: usize,
    pub repetitions: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            k: 5,
            repetitions: 10,
            threshold: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub cv: CvReport,
    pub test: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: ProtocolConfig,
    pub repetitions: Vec<RepetitionResult>,
    /// Hold-out metrics over repetitions.
    pub test: MetricSummary,
    /// Mean validation metrics over all folds of all repetitions.
    pub cv: MetricSummary,
    /// Curves of the first repetition's hold-out scores.
    pub roc_curve: Vec<CurvePoint>,
    pub pr_curve: Vec<CurvePoint>,
}

/// Repeated stratified train/test split with k-fold CV on the training part
/// and a final fit scored on the untouched hold-out.
pub fn evaluate_protocol<T: Scalar>(
    data: &Dataset<T>,
    protocol: &ProtocolConfig,
    pipeline: &dyn FoldPipeline<T>,
) -> Result<EvalReport, EvalError> {
    let threshold = T::lit(protocol.threshold);
    let fractions = [1.0 - protocol.test_fraction, protocol.test_fraction];
    let mut reps = Vec::with_capacity(protocol.repetitions);
    let mut all_folds = Vec::new();
    let mut curves = (Vec::new(), Vec::new());
    for r in 0..protocol.repetitions {
        let seed = derive_indexed(protocol.seed, "repetition", r as u64);
        let parts = split::stratified_split(data.labels(), &fractions, seed)?;
        let train = data.subset(&parts[0]);
        let test = data.subset(&parts[1]);
        let cv = kfold_cv(&train, protocol.k, pipeline, seed, threshold)?;
        let (scores, test_metrics) = score_fold(pipeline, &train, &test, derive_indexed(seed, "final", 0), threshold)?;
        if r == 0 {
            curves = (
                metrics::roc_curve(&scores, test.labels())?,
                metrics::pr_curve(&scores, test.labels())?,
            );
        }
        all_folds.extend(cv.folds.iter().map(|f| f.metrics));
        reps.push(RepetitionResult {
            repetition: r,
            seed,
            n_train: train.n_rows(),
            n_test: test.n_rows(),
            cv,
            test: test_metrics,
        });
    }
    let test = MetricSummary::of(&reps.iter().map(|r| r.test).collect::<Vec<_>>());
    Ok(EvalReport {
        protocol: protocol.clone(),
        repetitions: reps,
        test,
        cv: MetricSummary::of(&all_folds),
        roc_curve: curves.0,
        pr_curve: curves.1,
    })
}
