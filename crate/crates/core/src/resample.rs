//! Minority oversampling by interpolation (SMOTE) followed by Tomek-link
//! cleaning.
//!
//! Neighbor searches run in a standardized space fitted on the fold being
//! resampled: missing values are imputed with the column median and every
//! column is scaled to zero mean and unit variance. The imputation is used
//! for distances only; synthetic rows keep the missing pattern of their base
//! row.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ResampleError {
    #[error("SMOTE needs at least 2 minority samples, got {0}")]
    TooFewMinority(usize),
    #[error("fold must contain both classes")]
    SingleClass,
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TomekRemoval {
    #[default]
    MajorityOnly,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResampleConfig {
    pub k_neighbors: usize,
    /// Target minority:majority ratio after oversampling.
    pub ratio: f64,
    pub tomek: TomekRemoval,
    pub seed: u64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            ratio: 1.0,
            tomek: TomekRemoval::MajorityOnly,
            seed: 0,
        }
    }
}

impl ResampleConfig {
    pub fn validate(&self) -> Result<(), ResampleError> {
        if self.k_neighbors < 1 {
            return Err(ResampleError::InvalidConfig("k_neighbors must be >= 1"));
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(ResampleError::InvalidConfig("ratio must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Median imputation plus z-scoring, fitted on one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    medians: Vec<T>,
    means: Vec<T>,
    scales: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(data: &Dataset<T>) -> Self {
        let d = data.n_cols();
        let mut medians = Vec::with_capacity(d);
        let mut means = Vec::with_capacity(d);
        let mut scales = Vec::with_capacity(d);
        for j in 0..d {
            let mut col: Vec<T> = data.column(j).into_iter().filter(|v| !v.is_missing()).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            let median = if col.is_empty() {
                T::zero()
            } else if col.len() % 2 == 1 {
                col[col.len() / 2]
            } else {
                (col[col.len() / 2 - 1] + col[col.len() / 2]) * T::lit(0.5)
            };
            let imputed: Vec<T> = data
                .column(j)
                .into_iter()
                .map(|v| if v.is_missing() { median } else { v })
                .collect();
            let (mean, std) = crate::scalar::mean_std(&imputed).unwrap_or((T::zero(), T::zero()));
            medians.push(median);
            means.push(mean);
            scales.push(if std > T::zero() && std.is_finite() { std } else { T::one() });
        }
        Self {
            medians,
            means,
            scales,
        }
    }

    pub fn transform(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                let v = if v.is_missing() { self.medians[j] } else { v };
                (v - self.means[j]) / self.scales[j]
            })
            .collect()
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Provenance of one synthetic row: `row = base + lambda * (neighbor - base)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub id: u64,
    pub base_id: u64,
    pub neighbor_id: u64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutput<T> {
    pub rows: Vec<Vec<T>>,
    pub origins: Vec<SyntheticOrigin>,
}

/// For every row of `data`, the indices of its `k` nearest other rows
/// (squared Euclidean distance in `space`, ties by id).
pub fn nearest_neighbors<T: Scalar>(data: &Dataset<T>, space: &Standardizer<T>, k: usize) -> Vec<Vec<usize>> {
    let z: Vec<Vec<T>> = data.rows().map(|r| space.transform(r)).collect();
    (0..data.n_rows())
        .map(|i| {
            let mut cand: Vec<(T, u64, usize)> = (0..data.n_rows())
                .filter(|&j| j != i)
                .map(|j| (sq_dist(&z[i], &z[j]), data.id(j), j))
                .collect();
            cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
            cand.into_iter().take(k).map(|c| c.2).collect()
        })
        .collect()
}

/// Interpolates `n_synthetic` new rows between minority rows and their
/// nearest minority neighbors, with `lambda` drawn uniformly from [0, 1).
///
/// Random draws per synthetic row, in order: base row, neighbor rank, lambda.
/// Rows are processed in ascending id order so the output does not depend on
/// input order.
pub fn smote<T: Scalar>(
    minority: &Dataset<T>,
    n_synthetic: usize,
    space: &Standardizer<T>,
    config: &ResampleConfig,
    first_id: u64,
) -> Result<SmoteOutput<T>, ResampleError> {
    smote_with_lambda(minority, n_synthetic, space, config, first_id, |rng| rng.gen::<f64>())
}

/// [`smote`] with a caller-supplied interpolation coefficient source.
pub fn smote_with_lambda<T: Scalar>(
    minority: &Dataset<T>,
    n_synthetic: usize,
    space: &Standardizer<T>,
    config: &ResampleConfig,
    first_id: u64,
    mut lambda: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> Result<SmoteOutput<T>, ResampleError> {
    config.validate()?;
    if n_synthetic == 0 {
        return Ok(SmoteOutput {
            rows: Vec::new(),
            origins: Vec::new(),
        });
    }
    let m = minority.n_rows();
    if m < 2 {
        return Err(ResampleError::TooFewMinority(m));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| minority.id(i));
    let sorted = minority.subset(&order);
    let k = config.k_neighbors.min(m - 1);
    let neighbors = nearest_neighbors(&sorted, space, k);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::with_capacity(n_synthetic);
    let mut origins = Vec::with_capacity(n_synthetic);
    for s in 0..n_synthetic {
        let base = rng.gen_range(0..m);
        let nb = neighbors[base][rng.gen_range(0..k)];
        let lam = lambda(&mut rng);
        let lam_t = T::lit(lam);
        let x = sorted.row(base);
        let n = sorted.row(nb);
        let row: Vec<T> = x
            .iter()
            .zip(n)
            .map(|(&xv, &nv)| {
                if xv.is_missing() {
                    T::missing()
                } else if nv.is_missing() {
                    xv
                } else {
                    xv + lam_t * (nv - xv)
                }
            })
            .collect();
        rows.push(row);
        origins.push(SyntheticOrigin {
            id: first_id + s as u64,
            base_id: sorted.id(base),
            neighbor_id: sorted.id(nb),
            lambda: lam,
        });
    }
    Ok(SmoteOutput { rows, origins })
}

/// Opposite-class pairs `(a, b)`, `a < b`, that are each other's nearest neighbor.
pub fn tomek_links<T: Scalar>(data: &Dataset<T>, space: &Standardizer<T>) -> Vec<(usize, usize)> {
    if data.n_rows() < 2 {
        return Vec::new();
    }
    let nn: Vec<usize> = nearest_neighbors(data, space, 1).into_iter().map(|v| v[0]).collect();
    let labels = data.labels();
    (0..data.n_rows())
        .filter_map(|a| {
            let b = nn[a];
            (a < b && nn[b] == a && labels[a] != labels[b]).then_some((a, b))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomekOutput<T> {
    pub data: Dataset<T>,
    pub removed_ids: Vec<u64>,
}

/// Removes Tomek-link members: the `majority` label's member, or both.
pub fn tomek_clean_with_majority<T: Scalar>(
    data: &Dataset<T>,
    config: &ResampleConfig,
    space: &Standardizer<T>,
    majority: u8,
) -> TomekOutput<T> {
    let links = tomek_links(data, space);
    let mut drop = vec![false; data.n_rows()];
    for (a, b) in links {
        for i in [a, b] {
            if config.tomek == TomekRemoval::Both || data.labels()[i] == majority {
                drop[i] = true;
            }
        }
    }
    let keep: Vec<usize> = (0..data.n_rows()).filter(|&i| !drop[i]).collect();
    let mut removed_ids: Vec<u64> = (0..data.n_rows()).filter(|&i| drop[i]).map(|i| data.id(i)).collect();
    removed_ids.sort_unstable();
    TomekOutput {
        data: data.subset(&keep),
        removed_ids,
    }
}

/// Tomek cleaning in a space fitted on `data`. The majority is the more
/// frequent label, label 0 on a tie.
pub fn tomek_clean<T: Scalar>(data: &Dataset<T>, config: &ResampleConfig) -> TomekOutput<T> {
    let majority = u8::from(data.positives() > data.negatives());
    let space = Standardizer::fit(data);
    tomek_clean_with_majority(data, config, &space, majority)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResampleOutput<T> {
    pub data: Dataset<T>,
    pub origins: Vec<SyntheticOrigin>,
    pub removed_ids: Vec<u64>,
    pub minority_label: u8,
}

/// SMOTE up to the target ratio, then Tomek cleaning. Only ever applied to
/// training folds.
pub fn resample<T: Scalar>(fold: &Dataset<T>, config: &ResampleConfig) -> Result<ResampleOutput<T>, ResampleError> {
    config.validate()?;
    if !fold.has_both_classes() {
        return Err(ResampleError::SingleClass);
    }
    let minority_label = u8::from(fold.positives() <= fold.negatives());
    let majority_label = 1 - minority_label;
    let n_min = fold.labels().iter().filter(|&&y| y == minority_label).count();
    let n_maj = fold.n_rows() - n_min;
    let target = (config.ratio * n_maj as f64).round() as usize;
    let n_synthetic = target.saturating_sub(n_min);

    let space = Standardizer::fit(fold);
    let minority_idx: Vec<usize> = (0..fold.n_rows()).filter(|&i| fold.labels()[i] == minority_label).collect();
    let minority = fold.subset(&minority_idx);
    let first_id = fold.ids().iter().copied().max().map_or(0, |m| m + 1);
    let synth = smote(&minority, n_synthetic, &space, config, first_id)?;

    let mut combined = fold.clone();
    for (row, origin) in synth.rows.iter().zip(&synth.origins) {
        combined
            .push(row, minority_label, origin.id, true)
            .expect("synthetic rows share the fold width");
    }
    let cleaned = tomek_clean_with_majority(&combined, config, &space, majority_label);
    Ok(ResampleOutput {
        data: cleaned.data,
        origins: synth.origins,
        removed_ids: cleaned.removed_ids,
        minority_label,
    })
}
