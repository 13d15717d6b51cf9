//! Pipeline configuration: one TOML file, with environment and flag
//! overrides for paths.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use botwatch_core::evaluate::ProtocolConfig;
use botwatch_core::seed::derive_seed;
use botwatch_core::tuning::Grid;
use botwatch_core::{BoosterConfig, ResampleConfig, SelectionThreshold};
use botwatch_pipeline::corpus::{parse_timestamp, Timestamp};
use botwatch_pipeline::featurize::FitConfig;
use botwatch_pipeline::labelfusion::FusionPolicy;
use serde::{Deserialize, Serialize};

use crate::failure::Validation;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub suspended: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestSection {
    pub tolerance: f64,
}

impl Default for IngestSection {
    fn default() -> Self {
        Self { tolerance: 0.001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSection {
    /// RFC 3339 instant; enables the temporal generalization run.
    pub boundary: Option<String>,
    pub train_fraction: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self {
            boundary: None,
            train_fraction: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    /// Defaults to the number of ingested accounts.
    pub n_users: Option<u64>,
    pub quota_a: Option<u64>,
    pub quota_b: Option<u64>,
    /// Survivors of the first stage; defaults to the funnel's forwarded count
    /// when labels exist, otherwise every user.
    pub survivors: Option<u64>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            n_users: None,
            quota_a: None,
            quota_b: Some(2000),
            survivors: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainSection {
    pub top_k: usize,
    pub background_size: usize,
}

impl Default for ExplainSection {
    fn default() -> Self {
        Self {
            top_k: 20,
            background_size: 100,
        }
    }
}

/// Everything a run depends on. Seeds inside the nested sections are
/// ignored; every stage seed is derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// SMOTE/Tomek on training data before every fit.
    pub rebalance: bool,
    pub selection: SelectionThreshold,
    pub paths: Paths,
    pub window: WindowSection,
    pub ingest: IngestSection,
    pub fusion: FusionPolicy,
    pub features: FitConfig,
    pub resample: ResampleConfig,
    pub booster: BoosterConfig,
    pub grid: Option<Grid>,
    pub protocol: ProtocolConfig,
    pub explain: ExplainSection,
    pub schedule: ScheduleSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            rebalance: true,
            selection: SelectionThreshold::default(),
            paths: Paths::default(),
            window: WindowSection::default(),
            ingest: IngestSection::default(),
            fusion: FusionPolicy::default(),
            features: FitConfig::default(),
            resample: ResampleConfig::default(),
            booster: BoosterConfig::default(),
            grid: None,
            protocol: ProtocolConfig::default(),
            explain: ExplainSection::default(),
            schedule: ScheduleSection::default(),
        }
    }
}

/// Values from the command line that beat the file and the environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub window_boundary: Option<String>,
}

pub const ENV_CORPUS: &str = "BOTWATCH_CORPUS";
pub const ENV_SCORES: &str = "BOTWATCH_SCORES";
pub const ENV_SUSPENDED: &str = "BOTWATCH_SUSPENDED";
pub const ENV_OUT: &str = "BOTWATCH_OUT";

/// A validated configuration with absolute paths.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: PipelineConfig,
    pub corpus: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub suspended: Option<PathBuf>,
    pub out: PathBuf,
    pub boundary: Option<Timestamp>,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Validation(msg.into()).into()
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(format!("invalid configuration: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.booster.validate().map_err(|e| invalid(format!("booster: {e}")))?;
        self.fusion.validate().map_err(|e| invalid(format!("fusion: {e}")))?;
        self.resample.validate().map_err(|e| invalid(format!("resample: {e}")))?;
        if let Some(grid) = &self.grid {
            if grid.expand(&self.booster).is_empty() {
                return Err(invalid("grid: every axis needs at least one value"));
            }
            for cfg in grid.expand(&self.booster) {
                cfg.validate().map_err(|e| invalid(format!("grid: {e}")))?;
            }
        }
        let p = &self.protocol;
        if !(p.test_fraction > 0.0 && p.test_fraction < 1.0) {
            return Err(invalid("protocol.test_fraction must lie strictly between 0 and 1"));
        }
        if p.k < 2 || p.repetitions == 0 {
            return Err(invalid("protocol needs k >= 2 and at least one repetition"));
        }
        if !(self.window.train_fraction > 0.0 && self.window.train_fraction < 1.0) {
            return Err(invalid("window.train_fraction must lie strictly between 0 and 1"));
        }
        if !(0.0..=1.0).contains(&self.ingest.tolerance) {
            return Err(invalid("ingest.tolerance must lie in [0, 1]"));
        }
        if self.explain.top_k == 0 || self.explain.background_size == 0 {
            return Err(invalid("explain.top_k and explain.background_size must be positive"));
        }
        if matches!(self.schedule.quota_a, Some(0)) || matches!(self.schedule.quota_b, Some(0)) {
            return Err(invalid("schedule quotas must be positive"));
        }
        Ok(())
    }

    /// Seed for one named stage.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }

    /// The configuration without paths, which is what outputs depend on.
    pub fn settings_json(&self) -> String {
        let mut c = self.clone();
        c.paths = Paths::default();
        serde_json::to_string(&c).expect("config serializes")
    }
}

fn rebase(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn env_path(name: &str) -> Option<PathBuf> {
    std::env::var_os(name).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Loads `config_path` (or defaults), applies environment and flag
/// overrides and validates the result. Paths in the file are relative to
/// the file; environment and flag paths are relative to the working
/// directory.
pub fn load(config_path: Option<&Path>, overrides: &Overrides) -> Result<Settings> {
    let cwd = std::env::current_dir().context("reading the working directory")?;
    let (mut config, base) = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
            let base = path.parent().map(|p| rebase(&cwd, p.to_path_buf())).unwrap_or_else(|| cwd.clone());
            (PipelineConfig::from_toml(&text)?, base)
        }
        None => (PipelineConfig::default(), cwd.clone()),
    };
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(b) = &overrides.window_boundary {
        config.window.boundary = Some(b.clone());
    }
    config.validate()?;

    let pick = |from_file: &Option<PathBuf>, env: &str| -> Option<PathBuf> {
        env_path(env)
            .map(|p| rebase(&cwd, p))
            .or_else(|| from_file.clone().map(|p| rebase(&base, p)))
    };
    let corpus = pick(&config.paths.corpus, ENV_CORPUS);
    let scores = pick(&config.paths.scores, ENV_SCORES);
    let suspended = pick(&config.paths.suspended, ENV_SUSPENDED);
    let out = overrides
        .out
        .clone()
        .map(|p| rebase(&cwd, p))
        .or_else(|| pick(&config.paths.out, ENV_OUT))
        .ok_or_else(|| invalid("no output directory: set paths.out, BOTWATCH_OUT or --out"))?;
    let boundary = config
        .window
        .boundary
        .as_deref()
        .map(|b| parse_timestamp(b).map_err(|e| invalid(format!("window boundary {b:?}: {e}"))))
        .transpose()?;
    Ok(Settings {
        config,
        corpus,
        scores,
        suspended,
        out,
        boundary,
    })
}

impl Settings {
    /// An input path that must exist for the current command.
    pub fn input(&self, which: &str) -> Result<&Path> {
        let (path, env) = match which {
            "corpus" => (&self.corpus, ENV_CORPUS),
            "scores" => (&self.scores, ENV_SCORES),
            "suspended" => (&self.suspended, ENV_SUSPENDED),
            _ => unreachable!("unknown input {which}"),
        };
        let path = path
            .as_deref()
            .ok_or_else(|| invalid(format!("no {which} path: set paths.{which} or {env}")))?;
        if !path.is_file() {
            return Err(invalid(format!("{which} file {} does not exist", path.display())));
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = PipelineConfig::from_toml("sede = 3").unwrap_err();
        assert!(err.downcast_ref::<Validation>().is_some());
        assert!(PipelineConfig::from_toml("[booster]\nrounds = 3").is_err());
    }

    #[test]
    fn nested_sections_parse() {
        let c = PipelineConfig::from_toml(
            "seed = 9\n[booster]\nnum_rounds = 20\nmax_depth = 3\n[grid]\nlearning_rate = [0.1]\nmax_depth = [2, 3]\n\
             num_rounds = [10]\nreg_lambda = [1.0]\ngamma = [0.0]\nsubsample = [1.0]\n[fusion]\nbot_threshold_a = 80\n",
        )
        .unwrap();
        assert_eq!((c.seed, c.booster.num_rounds, c.fusion.bot_threshold_a), (9, 20, 80));
        assert_eq!(c.grid.unwrap().max_depth, vec![2, 3]);
    }

    #[test]
    fn invalid_values_fail_validation() {
        let mut c = PipelineConfig::default();
        c.protocol.k = 1;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.fusion.normal_threshold_a = 90;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.booster.learning_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn stage_seeds_differ_and_follow_the_root() {
        let c = PipelineConfig::default();
        assert_ne!(c.stage_seed("booster"), c.stage_seed("resample"));
        let d = PipelineConfig { seed: 1, ..c.clone() };
        assert_ne!(c.stage_seed("booster"), d.stage_seed("booster"));
    }

    #[test]
    fn settings_ignore_paths() {
        let mut a = PipelineConfig::default();
        let b = a.clone();
        a.paths.out = Some("/tmp/elsewhere".into());
        assert_eq!(a.settings_json(), b.settings_json());
    }
}
