//! Numeric core of the bot-detection pipeline: gradient-boosted trees,
//! interventional Shapley attribution, SMOTE/Tomek resampling, ranking
//! metrics and stratified evaluation.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); NaN is the missing
//! value marker throughout. The aliases below fix the scalar to `f64`, which
//! is what the pipeline uses.

pub mod booster;
pub mod data;
pub mod evaluate;
pub mod feature_spec;
pub mod metrics;
pub mod resample;
pub mod scalar;
pub mod seed;
pub mod shapley;
pub mod split;
pub mod testkit;
pub mod tuning;

pub use booster::{BoosterConfig, BoosterError, SelectionThreshold};
pub use feature_spec::FeatureSpec;
pub use resample::{ResampleConfig, TomekRemoval};
pub use scalar::Scalar;

pub type Dataset = data::Dataset<f64>;
pub type Dataset32 = data::Dataset<f32>;
pub type TreeEnsemble = booster::TreeEnsemble<f64>;
pub type TreeEnsemble32 = booster::TreeEnsemble<f32>;
pub type Tree = booster::Tree<f64>;
pub type Explanation = shapley::Explanation<f64>;
pub type Explanation32 = shapley::Explanation<f32>;
pub type TrainReport = booster::TrainReport<f64>;
