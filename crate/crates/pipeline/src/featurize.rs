//! Assembly of the 335-slot feature matrix from a corpus view and the
//! statistics fitted on a (possibly different) training view.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use botwatch_core::data::Dataset;
use botwatch_core::FeatureSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{context_names, embedding_sentences, extract_context, fit_corpus_stats, CorpusStats, CONTEXT_DIM};
use crate::corpus::{CorpusView, Provenance};
use crate::embedding::{train_embeddings, EmbeddingConfig, EmbeddingError, EmbeddingTable};
use crate::graph::{build_graph, GRAPH_DIM, GRAPH_NAMES};
use crate::profile::{extract_profile, BigramModel, PROFILE_DIM, PROFILE_NAMES};
use crate::temporal::{extract_temporal, temporal_names, TemporalError, TEMPORAL_DIM};
use crate::text::Tokenizer;

pub const TOTAL_DIM: usize = PROFILE_DIM + CONTEXT_DIM + TEMPORAL_DIM + GRAPH_DIM;
pub const CATEGORIES: [(&str, usize); 4] = [
    ("profile", PROFILE_DIM),
    ("context", CONTEXT_DIM),
    ("time", TEMPORAL_DIM),
    ("graph", GRAPH_DIM),
];

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error("user {0} is not in the corpus view")]
    UnknownUser(String),
    #[error("statistics leakage: {0}")]
    Leakage(String),
    #[error("feature matrix line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Canonical names and category tags of all 335 slots.
pub fn canonical_spec() -> FeatureSpec {
    let mut names: Vec<String> = PROFILE_NAMES.iter().map(|s| s.to_string()).collect();
    names.extend(context_names());
    names.extend(temporal_names());
    names.extend(GRAPH_NAMES.iter().map(|s| s.to_string()));
    let categories = CATEGORIES
        .iter()
        .flat_map(|(c, n)| std::iter::repeat_n(c.to_string(), *n))
        .collect();
    FeatureSpec::new(names, categories).expect("canonical names are unique")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub embedding: EmbeddingConfig,
}

/// A fitted statistic together with the view it was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted<T> {
    pub provenance: Provenance,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedStatistics {
    pub bigram: Fitted<BigramModel>,
    pub corpus_stats: Fitted<CorpusStats>,
    pub embeddings: Fitted<EmbeddingTable>,
}

/// Which views produced the statistics behind a feature matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatisticsProvenance {
    pub bigram: Provenance,
    pub corpus_stats: Provenance,
    pub embeddings: Provenance,
}

impl FittedStatistics {
    pub fn provenance(&self) -> StatisticsProvenance {
        StatisticsProvenance {
            bigram: self.bigram.provenance.clone(),
            corpus_stats: self.corpus_stats.provenance.clone(),
            embeddings: self.embeddings.provenance.clone(),
        }
    }
}

/// Fits the bigram model, document frequencies and embeddings on `view`.
pub fn fit_statistics(view: &CorpusView, config: &FitConfig) -> Result<FittedStatistics, FeaturizeError> {
    let provenance = view.provenance();
    let tokenizer = Tokenizer::default();
    let bigram = BigramModel::fit(view.accounts().map(|a| a.screen_name.as_str()));
    let stats = fit_corpus_stats(view);
    let embeddings = train_embeddings(&embedding_sentences(view, &tokenizer), &config.embedding)?;
    Ok(FittedStatistics {
        bigram: Fitted {
            provenance: provenance.clone(),
            value: bigram,
        },
        corpus_stats: Fitted {
            provenance: provenance.clone(),
            value: stats,
        },
        embeddings: Fitted {
            provenance,
            value: embeddings,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub spec: FeatureSpec,
    pub user_ids: Vec<String>,
    pub labels: Vec<Option<u8>>,
    /// Row-major, NaN for missing.
    pub values: Vec<f64>,
    pub provenance: Option<StatisticsProvenance>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.spec.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn set_labels(&mut self, labels: &BTreeMap<String, u8>) {
        self.labels = self.user_ids.iter().map(|u| labels.get(u).copied()).collect();
    }

    /// Labeled rows as a training set; dataset ids are matrix row indices.
    pub fn to_dataset(&self) -> Dataset<f64> {
        let mut data = Dataset::new(self.n_cols());
        for (i, label) in self.labels.iter().enumerate() {
            if let Some(y) = label {
                data.push(self.row(i), *y, i as u64, false).expect("rows have spec width");
            }
        }
        data
    }

    /// `user_id,label,<names>`; empty cells for missing values and for
    /// unlabeled rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FeaturizeError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["user_id".to_string(), "label".to_string()];
        header.extend(self.spec.names().iter().cloned());
        w.write_record(&header)?;
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.n_rows() {
            rec.clear();
            rec.push(self.user_ids[i].clone());
            rec.push(self.labels[i].map(|y| y.to_string()).unwrap_or_default());
            rec.extend(
                self.row(i)
                    .iter()
                    .map(|v| if v.is_nan() { String::new() } else { v.to_string() }),
            );
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads a matrix written by [`write_csv`](Self::write_csv). Canonical
    /// headers get the canonical category tags.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, FeaturizeError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let fmt = |line: usize, message: String| FeaturizeError::Format { line, message };
        if header.len() < 2 || &header[0] != "user_id" || &header[1] != "label" {
            return Err(fmt(1, "header must start with user_id,label".into()));
        }
        let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let canonical = canonical_spec();
        let spec = if names.as_slice() == canonical.names() {
            canonical
        } else {
            let n = names.len();
            FeatureSpec::new(names, vec!["generic".to_string(); n]).map_err(|e| fmt(1, e.to_string()))?
        };
        let mut m = FeatureMatrix {
            spec,
            user_ids: Vec::new(),
            labels: Vec::new(),
            values: Vec::new(),
            provenance: None,
        };
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            m.user_ids.push(rec[0].to_string());
            m.labels.push(match &rec[1] {
                "" => None,
                "0" => Some(0),
                "1" => Some(1),
                other => return Err(fmt(line, format!("bad label {other:?}"))),
            });
            for cell in rec.iter().skip(2) {
                m.values
                    .push(if cell.is_empty() { f64::NAN } else { cell.parse().map_err(|e| fmt(line, format!("{e}")))? });
            }
        }
        Ok(m)
    }
}

/// Fits statistics on one view and featurizes users of any view with them.
pub trait FeaturePipeline: Sync {
    fn fit(&self, view: &CorpusView) -> Result<FittedStatistics, FeaturizeError>;

    /// Rows for `users` of `view`. The returned matrix records the
    /// provenance of the statistics actually used.
    fn featurize(&self, view: &CorpusView, fitted: &FittedStatistics, users: &[String]) -> Result<FeatureMatrix, FeaturizeError>;
}

#[derive(Debug, Clone, Default)]
pub struct StandardPipeline {
    pub config: FitConfig,
}

impl FeaturePipeline for StandardPipeline {
    fn fit(&self, view: &CorpusView) -> Result<FittedStatistics, FeaturizeError> {
        fit_statistics(view, &self.config)
    }

    fn featurize(&self, view: &CorpusView, fitted: &FittedStatistics, users: &[String]) -> Result<FeatureMatrix, FeaturizeError> {
        featurize(view, fitted, users)
    }
}

/// Extracts every slot for `users`, in the given order. Graph degrees come
/// from `view` itself; everything learned comes from `fitted`.
pub fn featurize(view: &CorpusView, fitted: &FittedStatistics, users: &[String]) -> Result<FeatureMatrix, FeaturizeError> {
    let spec = canonical_spec();
    let graph = build_graph(view);
    let degrees = graph.all_stats();
    let tokenizer = Tokenizer::default();
    let window = view.window();
    let reference = view.reference_date();
    let rows: Vec<Vec<f64>> = users
        .par_iter()
        .map(|u| {
            let account = view.account(u).ok_or_else(|| FeaturizeError::UnknownUser(u.clone()))?;
            let posts = view.tweets_of(u);
            let mut row = Vec::with_capacity(TOTAL_DIM);
            row.extend(extract_profile(account, posts, &fitted.bigram.value, reference));
            row.extend(extract_context(
                posts,
                &fitted.corpus_stats.value,
                &fitted.embeddings.value,
                &tokenizer,
            ));
            row.extend(extract_temporal(posts, &window)?);
            row.extend(degrees.get(u.as_str()).copied().unwrap_or_default().to_array());
            Ok(row)
        })
        .collect::<Result<_, FeaturizeError>>()?;
    Ok(FeatureMatrix {
        spec,
        user_ids: users.to_vec(),
        labels: vec![None; users.len()],
        values: rows.into_iter().flatten().collect(),
        provenance: Some(fitted.provenance()),
    })
}

/// Rejects matrices whose statistics were not all fitted on `train`, or
/// any that were fitted on `test`.
pub fn check_no_leakage(
    used: &StatisticsProvenance,
    train: &Provenance,
    test_digest: &str,
) -> Result<(), FeaturizeError> {
    for (name, p) in [
        ("bigram model", &used.bigram),
        ("document frequencies", &used.corpus_stats),
        ("embeddings", &used.embeddings),
    ] {
        if p.corpus_digest == test_digest {
            return Err(FeaturizeError::Leakage(format!("{name} fitted on the test window")));
        }
        if p != train {
            return Err(FeaturizeError::Leakage(format!("{name} not fitted on the training window")));
        }
    }
    Ok(())
}
