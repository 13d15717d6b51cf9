//! Skip-gram word embeddings trained with negative sampling.
//!
//! Training is sequential and seeded, so a given corpus and config always
//! produce the same table bit for bit. Only the input vectors are kept.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Provenance;

pub const EMBEDDING_DIM: usize = 10;
const FORMAT_HEADER: &str = "botwatch-embedding 1";

pub type Vector = [f64; EMBEDDING_DIM];

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vocabulary is empty after applying min_count {0}")]
    EmptyVocabulary(usize),
    #[error("invalid embedding config: {0}")]
    InvalidConfig(String),
    #[error("embedding file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("term {0:?} contains whitespace and cannot be stored")]
    UnstorableTerm(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 2,
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.window == 0 {
            return Err(EmbeddingError::InvalidConfig("window must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(EmbeddingError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Loss and gradients of one (center, context, negatives) example:
/// `-ln σ(u_o·v) - Σ_k ln σ(-u_k·v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub loss: f64,
    pub center: Vector,
    pub context: Vector,
    pub negatives: Vec<Vector>,
}

fn dot(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

pub fn sgns_loss_grad(center: &Vector, context: &Vector, negatives: &[Vector]) -> SgnsGradient {
    let s = dot(context, center);
    let mut loss = neg_log_sigmoid(s);
    let gp = sigmoid(s) - 1.0;
    let mut g_center = [0.0; EMBEDDING_DIM];
    let mut g_context = [0.0; EMBEDDING_DIM];
    for d in 0..EMBEDDING_DIM {
        g_center[d] = gp * context[d];
        g_context[d] = gp * center[d];
    }
    let mut g_negs = Vec::with_capacity(negatives.len());
    for u in negatives {
        let sk = dot(u, center);
        loss += neg_log_sigmoid(-sk);
        let gk = sigmoid(sk);
        let mut g = [0.0; EMBEDDING_DIM];
        for d in 0..EMBEDDING_DIM {
            g_center[d] += gk * u[d];
            g[d] = gk * center[d];
        }
        g_negs.push(g);
    }
    SgnsGradient {
        loss,
        center: g_center,
        context: g_context,
        negatives: g_negs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    terms: Vec<String>,
    index: BTreeMap<String, usize>,
    vectors: Vec<Vector>,
    config: EmbeddingConfig,
    epoch_losses: Vec<f64>,
}

/// Cumulative unigram^0.75 weights for negative draws.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let u = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Trains on `sentences` (token lists). Terms seen fewer than `min_count`
/// times are dropped before training.
pub fn train_embeddings(sentences: &[Vec<String>], config: &EmbeddingConfig) -> Result<EmbeddingTable, EmbeddingError> {
    config.validate()?;
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for s in sentences {
        for t in s {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= config.min_count as u64).collect();
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary(config.min_count));
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let terms: Vec<String> = vocab.iter().map(|(t, _)| t.to_string()).collect();
    let index: BTreeMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let sampler = NegativeSampler::new(&vocab.iter().map(|v| v.1).collect::<Vec<_>>());

    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| index.get(t).copied()).collect())
        .collect();
    let total_tokens: usize = encoded.iter().map(Vec::len).sum::<usize>() * config.epochs;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let v = terms.len();
    let mut input: Vec<Vector> = (0..v)
        .map(|_| std::array::from_fn(|_| (rng.gen::<f64>() - 0.5) / EMBEDDING_DIM as f64))
        .collect();
    let mut output: Vec<Vector> = vec![[0.0; EMBEDDING_DIM]; v];

    let mut seen = 0usize;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut negs: Vec<usize> = Vec::with_capacity(config.negatives);
    let mut neg_vecs: Vec<Vector> = Vec::with_capacity(config.negatives);
    for _ in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for sent in &encoded {
            for (i, &c) in sent.iter().enumerate() {
                let lr = config.learning_rate * (1.0 - seen as f64 / (total_tokens + 1) as f64).max(1e-4);
                seen += 1;
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window).min(sent.len() - 1);
                for (j, &o) in sent.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    negs.clear();
                    for _ in 0..config.negatives {
                        let k = sampler.draw(&mut rng);
                        if k != o {
                            negs.push(k);
                        }
                    }
                    neg_vecs.clear();
                    neg_vecs.extend(negs.iter().map(|&k| output[k]));
                    let g = sgns_loss_grad(&input[c], &output[o], &neg_vecs);
                    loss_sum += g.loss;
                    pairs += 1;
                    for d in 0..EMBEDDING_DIM {
                        input[c][d] -= lr * g.center[d];
                        output[o][d] -= lr * g.context[d];
                    }
                    for (&k, gk) in negs.iter().zip(&g.negatives) {
                        for d in 0..EMBEDDING_DIM {
                            output[k][d] -= lr * gk[d];
                        }
                    }
                }
            }
        }
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
    }
    Ok(EmbeddingTable {
        terms,
        index,
        vectors: input,
        config: config.clone(),
        epoch_losses,
    })
}

#[derive(Serialize, Deserialize)]
struct FileMeta {
    dim: usize,
    vocab_size: usize,
    config: EmbeddingConfig,
    epoch_losses: Vec<f64>,
    provenance: Provenance,
}

impl EmbeddingTable {
    pub fn lookup(&self, term: &str) -> Option<&Vector> {
        self.index.get(term).map(|&i| &self.vectors[i])
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms by descending training frequency, ties by term.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    /// Mean loss per training pair, one entry per epoch.
    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    /// Text form: a header line, one JSON metadata line, then one
    /// `term v0 .. v9` line per term.
    pub fn to_text(&self, provenance: &Provenance) -> Result<String, EmbeddingError> {
        let meta = FileMeta {
            dim: EMBEDDING_DIM,
            vocab_size: self.terms.len(),
            config: self.config.clone(),
            epoch_losses: self.epoch_losses.clone(),
            provenance: provenance.clone(),
        };
        let mut out = String::new();
        out.push_str(FORMAT_HEADER);
        out.push('\n');
        out.push_str(&serde_json::to_string(&meta).expect("metadata serializes"));
        out.push('\n');
        for (t, v) in self.terms.iter().zip(&self.vectors) {
            if t.chars().any(char::is_whitespace) || t.is_empty() {
                return Err(EmbeddingError::UnstorableTerm(t.clone()));
            }
            out.push_str(t);
            for x in v {
                write!(out, " {x}").expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<(Self, Provenance), EmbeddingError> {
        let err = |line: usize, message: String| EmbeddingError::Format { line, message };
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_HEADER) {
            return Err(err(1, format!("expected header {FORMAT_HEADER:?}")));
        }
        let meta: FileMeta = serde_json::from_str(lines.next().ok_or_else(|| err(2, "missing metadata".into()))?)
            .map_err(|e| err(2, e.to_string()))?;
        if meta.dim != EMBEDDING_DIM {
            return Err(err(2, format!("dimension {} is not {EMBEDDING_DIM}", meta.dim)));
        }
        let mut terms = Vec::with_capacity(meta.vocab_size);
        let mut vectors = Vec::with_capacity(meta.vocab_size);
        for (i, line) in lines.enumerate() {
            let mut parts = line.split(' ');
            let term = parts.next().unwrap_or_default().to_string();
            let vals: Vec<f64> = parts
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| err(i + 3, format!("{e}")))?;
            let vec: Vector = vals
                .try_into()
                .map_err(|v: Vec<f64>| err(i + 3, format!("expected {EMBEDDING_DIM} values, got {}", v.len())))?;
            terms.push(term);
            vectors.push(vec);
        }
        if terms.len() != meta.vocab_size {
            return Err(err(0, format!("expected {} terms, got {}", meta.vocab_size, terms.len())));
        }
        let index: BTreeMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != terms.len() {
            return Err(err(0, "duplicate term".into()));
        }
        Ok((
            Self {
                terms,
                index,
                vectors,
                config: meta.config,
                epoch_losses: meta.epoch_losses,
            },
            meta.provenance,
        ))
    }
}
