use botwatch_pipeline::corpus::CorpusView;
use botwatch_pipeline::featurize::{
    featurize, fit_statistics, FeatureMatrix, FeaturePipeline, FeaturizeError, FitConfig, FittedStatistics,
    StandardPipeline,
};
use botwatch_pipeline::generalization::{temporal_generalization, GeneralizationConfig, GeneralizationError};
use botwatch_pipeline::synth::{generate, SynthConfig};

/// Refits every statistic on whatever view it is asked to featurize.
struct RefitsOnEveryView(FitConfig);

impl FeaturePipeline for RefitsOnEveryView {
    fn fit(&self, view: &CorpusView) -> Result<FittedStatistics, FeaturizeError> {
        fit_statistics(view, &self.0)
    }

    fn featurize(&self, view: &CorpusView, _: &FittedStatistics, users: &[String]) -> Result<FeatureMatrix, FeaturizeError> {
        featurize(view, &fit_statistics(view, &self.0)?, users)
    }
}

/// Only the document frequencies come from the view being featurized.
struct RefitsDocumentFrequencies(FitConfig);

impl FeaturePipeline for RefitsDocumentFrequencies {
    fn fit(&self, view: &CorpusView) -> Result<FittedStatistics, FeaturizeError> {
        fit_statistics(view, &self.0)
    }

    fn featurize(&self, view: &CorpusView, fitted: &FittedStatistics, users: &[String]) -> Result<FeatureMatrix, FeaturizeError> {
        let mut stats = fitted.clone();
        let refit = fit_statistics(view, &self.0)?;
        stats.corpus_stats = refit.corpus_stats;
        featurize(view, &stats, users)
    }
}

fn two_windows(seed: u64) -> (CorpusView, CorpusView, std::collections::BTreeMap<String, u8>) {
    let cfg = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg).unwrap();
    let (left, right) = corpus.view.split_by_window(cfg.boundary()).unwrap();
    (left, right, corpus.truth)
}

fn gen_config() -> GeneralizationConfig {
    let mut cfg = GeneralizationConfig::default();
    cfg.booster.num_rounds = 60;
    cfg
}

#[test]
fn stationary_behaviour_generalizes_across_windows() {
    let (train, test, labels) = two_windows(3);
    let report = temporal_generalization(&train, &test, &labels, &StandardPipeline::default(), &gen_config()).unwrap();
    assert!(report.n_cross_window_test > 0);
    assert!(report.in_window.roc_auc > 0.95, "{:?}", report.in_window);
    let gap = (report.cross_window.roc_auc - report.in_window.roc_auc).abs();
    assert!(gap <= 0.05, "in-window {:?} cross-window {:?}", report.in_window, report.cross_window);
    assert_eq!(report.train.corpus_digest, train.digest());
}

#[test]
fn refitting_on_the_test_window_is_rejected() {
    let (train, test, labels) = two_windows(4);
    let cfg = gen_config();
    for pipeline in [
        &RefitsOnEveryView(FitConfig::default()) as &dyn FeaturePipeline,
        &RefitsDocumentFrequencies(FitConfig::default()),
    ] {
        let err = temporal_generalization(&train, &test, &labels, pipeline, &cfg).unwrap_err();
        assert!(
            matches!(err, GeneralizationError::Featurize(FeaturizeError::Leakage(_))),
            "unexpected error {err}"
        );
    }
}

#[test]
fn overlapping_windows_are_rejected() {
    let (train, test, labels) = two_windows(5);
    let err = temporal_generalization(&test, &train, &labels, &StandardPipeline::default(), &gen_config()).unwrap_err();
    assert!(matches!(err, GeneralizationError::OverlappingWindows { .. }));
}
