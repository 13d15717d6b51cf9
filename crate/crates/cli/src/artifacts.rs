//! Output directory handling and the content-hash manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use botwatch_pipeline::digest::sha256_hex;
use serde::{Deserialize, Serialize};

use crate::failure::MissingArtifact;

pub const CORPUS: &str = "corpus.jsonl";
pub const INGEST_REPORT: &str = "ingest.json";
pub const LABELS: &str = "labels.csv";
pub const FUNNEL: &str = "funnel.json";
pub const FEATURES: &str = "features.csv";
pub const EMBEDDINGS: &str = "embeddings.txt";
pub const FEATURIZE_REPORT: &str = "featurize.json";
pub const MODEL: &str = "model.json";
pub const TRAIN_REPORT: &str = "train.json";
pub const TUNE_REPORT: &str = "tune.json";
pub const EVAL_REPORT: &str = "evaluate.json";
pub const SHAP_VALUES: &str = "shap.csv";
pub const EXPLAIN_REPORT: &str = "explain.json";
pub const SCHEDULE: &str = "schedule.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const MANIFEST: &str = "manifest.json";

/// Which command writes each artifact.
pub fn producer(artifact: &str) -> &'static str {
    match artifact {
        CORPUS | INGEST_REPORT => "ingest",
        LABELS | FUNNEL => "label",
        FEATURES | EMBEDDINGS | FEATURIZE_REPORT => "featurize",
        MODEL | TRAIN_REPORT => "train",
        TUNE_REPORT => "tune",
        EVAL_REPORT => "evaluate",
        SHAP_VALUES | EXPLAIN_REPORT => "explain",
        SCHEDULE => "schedule-labels",
        _ => "report",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub sha256: String,
    pub bytes: u64,
    pub stage: String,
    /// Artifacts and input files read to produce this one, with their hashes.
    pub inputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub root_seed: u64,
    /// Hash of the path-free configuration.
    pub settings_sha256: String,
    pub artifacts: BTreeMap<String, Entry>,
}

/// The output directory of one run.
#[derive(Debug)]
pub struct Workspace {
    dir: PathBuf,
    root_seed: u64,
    settings_sha256: String,
}

impl Workspace {
    pub fn open(dir: &Path, root_seed: u64, settings_json: &str) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            root_seed,
            settings_sha256: sha256_hex(settings_json.as_bytes()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, artifact: &str) -> PathBuf {
        self.dir.join(artifact)
    }

    pub fn exists(&self, artifact: &str) -> bool {
        self.path(artifact).is_file()
    }

    /// Contents of an upstream artifact, or a dependency error naming the
    /// command that produces it.
    pub fn require(&self, artifact: &str) -> Result<Vec<u8>> {
        let path = self.path(artifact);
        if !path.is_file() {
            return Err(MissingArtifact {
                artifact: path,
                producer: producer(artifact),
            }
            .into());
        }
        std::fs::read(&path).with_context(|| format!("reading {}", path.display()))
    }

    pub fn require_text(&self, artifact: &str) -> Result<String> {
        String::from_utf8(self.require(artifact)?).with_context(|| format!("{artifact} is not UTF-8"))
    }

    /// Writes `bytes` and records its hash together with the hashes of the
    /// named `inputs`, each given as (name, contents).
    pub fn write(&self, artifact: &str, bytes: &[u8], inputs: &[(&str, &[u8])]) -> Result<()> {
        let path = self.path(artifact);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let mut manifest = self.manifest()?;
        manifest.artifacts.insert(
            artifact.to_string(),
            Entry {
                sha256: sha256_hex(bytes),
                bytes: bytes.len() as u64,
                stage: producer(artifact).to_string(),
                inputs: inputs.iter().map(|(n, b)| (n.to_string(), sha256_hex(b))).collect(),
            },
        );
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(self.path(MANIFEST), text).context("writing manifest")?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, artifact: &str, value: &T, inputs: &[(&str, &[u8])]) -> Result<Vec<u8>> {
        let bytes = (serde_json::to_string_pretty(value)? + "\n").into_bytes();
        self.write(artifact, &bytes, inputs)?;
        Ok(bytes)
    }

    /// The current manifest. A manifest written under different settings
    /// or another root seed is started afresh.
    pub fn manifest(&self) -> Result<Manifest> {
        let fresh = Manifest {
            format: "botwatch-manifest".into(),
            version: 1,
            root_seed: self.root_seed,
            settings_sha256: self.settings_sha256.clone(),
            artifacts: BTreeMap::new(),
        };
        let path = self.path(MANIFEST);
        if !path.is_file() {
            return Ok(fresh);
        }
        let text = std::fs::read_to_string(&path).context("reading manifest")?;
        let existing: Manifest = serde_json::from_str(&text).context("parsing manifest")?;
        if existing.root_seed == fresh.root_seed && existing.settings_sha256 == fresh.settings_sha256 {
            Ok(existing)
        } else {
            Ok(fresh)
        }
    }
}
