//! Shapley attributions for tree ensembles in margin (log-odds) space.
//!
//! Coalition values are interventional: features outside the coalition are
//! replaced by the values of a background sample, and the model output is
//! averaged over the background set.
//!
//! [`shapley_tree`] computes the same values in polynomial time. For a fixed
//! background row `z`, a tree path reached by the hybrid of `x` and `z` is
//! determined by two disjoint feature sets: `A`, the features on which the
//! path follows `x` where `x` and `z` disagree, and `B`, those on which it
//! follows `z`. The leaf is reached exactly by coalitions `S` with `A ⊆ S`
//! and `S ∩ B = ∅`, a unanimity-style game with closed-form Shapley values.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::booster::{Node, Tree, TreeEnsemble};
use crate::scalar::{mean_std, Scalar};
use crate::booster::tree::goes_left;

/// Largest active feature count the exhaustive oracle accepts.
pub const MAX_EXACT_FEATURES: usize = 15;

#[derive(Debug, Error, PartialEq)]
pub enum ShapleyError {
    #[error("background set is empty")]
    EmptyBackground,
    #[error("{0} active features exceed the exhaustive limit of {MAX_EXACT_FEATURES}")]
    TooManyFeatures(usize),
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no explanations to summarize")]
    EmptyInput,
}

/// Per-feature contributions for one prediction. `contributions` has one
/// entry per slot of the model's feature spec; inactive slots are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Explanation<T> {
    pub user_id: String,
    pub base_value: T,
    pub contributions: Vec<T>,
    pub margin: T,
}

impl<T: Scalar> Explanation<T> {
    /// `base_value + Σ contributions - margin`.
    pub fn residual(&self) -> T {
        self.base_value + self.contributions.iter().copied().sum::<T>() - self.margin
    }
}

fn check_inputs<T: Scalar>(model: &TreeEnsemble<T>, instance: &[T], background: &[Vec<T>]) -> Result<(), ShapleyError> {
    if background.is_empty() {
        return Err(ShapleyError::EmptyBackground);
    }
    let d = model.n_features();
    for row in std::iter::once(instance).chain(background.iter().map(Vec::as_slice)) {
        if row.len() != d {
            return Err(ShapleyError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }
    Ok(())
}

/// Expected margin with the features flagged in `coalition` fixed to the
/// instance's values and the rest drawn from each background row.
pub fn coalition_value<T: Scalar>(
    model: &TreeEnsemble<T>,
    instance: &[T],
    coalition: &[bool],
    background: &[Vec<T>],
) -> Result<T, ShapleyError> {
    check_inputs(model, instance, background)?;
    let mut hybrid = vec![T::zero(); instance.len()];
    let mut total = T::zero();
    for z in background {
        for j in 0..instance.len() {
            hybrid[j] = if coalition[j] { instance[j] } else { z[j] };
        }
        total = total + model.margin_unchecked(&hybrid);
    }
    Ok(total / T::from_count(background.len()))
}

fn mean_margin<T: Scalar>(model: &TreeEnsemble<T>, background: &[Vec<T>]) -> T {
    let total: T = background.iter().map(|z| model.margin_unchecked(z)).sum();
    total / T::from_count(background.len())
}

/// Exhaustive Shapley values over all coalitions of the active features.
pub fn shapley_exact<T: Scalar>(
    model: &TreeEnsemble<T>,
    instance: &[T],
    background: &[Vec<T>],
) -> Result<Explanation<T>, ShapleyError> {
    check_inputs(model, instance, background)?;
    let active = model.spec.active_indices();
    let m = active.len();
    if m > MAX_EXACT_FEATURES {
        return Err(ShapleyError::TooManyFeatures(m));
    }
    // value of every coalition, indexed by bitmask over `active`
    let mut values = vec![T::zero(); 1 << m];
    let mut coalition = vec![false; instance.len()];
    for (mask, v) in values.iter_mut().enumerate() {
        for (bit, &j) in active.iter().enumerate() {
            coalition[j] = mask & (1 << bit) != 0;
        }
        *v = coalition_value(model, instance, &coalition, background)?;
    }
    // |S|! (m - |S| - 1)! / m!
    let mut fact = vec![1.0f64; m + 1];
    for i in 1..=m {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<T> = (0..m.max(1))
        .map(|s| {
            if m == 0 {
                T::zero()
            } else {
                T::lit(fact[s] * fact[m - s - 1] / fact[m])
            }
        })
        .collect();

    let mut contributions = vec![T::zero(); instance.len()];
    for (bit, &j) in active.iter().enumerate() {
        let mut phi = T::zero();
        for mask in 0..(1usize << m) {
            if mask & (1 << bit) != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            phi = phi + weight[s] * (values[mask | (1 << bit)] - values[mask]);
        }
        contributions[j] = phi;
    }
    Ok(Explanation {
        user_id: String::new(),
        base_value: values[0],
        contributions,
        margin: model.margin_unchecked(instance),
    })
}

/// `1 / (a * C(a + b, a))`: the Shapley weight of one of the `a` required
/// features in a game that pays out iff all `a` join and none of `b` do.
fn unanimity_weight(a: usize, b: usize) -> f64 {
    debug_assert!(a >= 1);
    // C(a + b, a) built incrementally
    let mut c = 1.0f64;
    for i in 1..=b {
        c = c * (a + i) as f64 / i as f64;
    }
    1.0 / (a as f64 * c)
}

struct PathState {
    /// 1 = follows the instance, 2 = follows the background row, 0 = unseen.
    side: Vec<u8>,
    a: Vec<usize>,
    b: Vec<usize>,
}

fn traverse<T: Scalar>(
    tree: &Tree<T>,
    node: usize,
    x: &[T],
    z: &[T],
    state: &mut PathState,
    scale: T,
    phi: &mut [T],
) {
    match &tree.nodes[node] {
        Node::Leaf { weight, .. } => {
            let v = *weight * scale;
            let (na, nb) = (state.a.len(), state.b.len());
            if na > 0 {
                let w = T::lit(unanimity_weight(na, nb)) * v;
                for &i in &state.a {
                    phi[i] = phi[i] + w;
                }
            }
            if nb > 0 {
                let w = T::lit(unanimity_weight(nb, na)) * v;
                for &i in &state.b {
                    phi[i] = phi[i] - w;
                }
            }
        }
        Node::Split {
            feature,
            threshold,
            default_left,
            left,
            right,
            ..
        } => {
            let f = *feature;
            let child = |go_left: bool| if go_left { *left } else { *right };
            let x_dir = goes_left(x[f], *threshold, *default_left);
            let z_dir = goes_left(z[f], *threshold, *default_left);
            match state.side[f] {
                1 => traverse(tree, child(x_dir), x, z, state, scale, phi),
                2 => traverse(tree, child(z_dir), x, z, state, scale, phi),
                _ if x_dir == z_dir => traverse(tree, child(x_dir), x, z, state, scale, phi),
                _ => {
                    state.side[f] = 1;
                    state.a.push(f);
                    traverse(tree, child(x_dir), x, z, state, scale, phi);
                    state.a.pop();
                    state.side[f] = 2;
                    state.b.push(f);
                    traverse(tree, child(z_dir), x, z, state, scale, phi);
                    state.b.pop();
                    state.side[f] = 0;
                }
            }
        }
    }
}

/// Polynomial-time interventional Shapley values, equal to
/// [`shapley_exact`] up to rounding.
pub fn shapley_tree<T: Scalar>(
    model: &TreeEnsemble<T>,
    instance: &[T],
    background: &[Vec<T>],
) -> Result<Explanation<T>, ShapleyError> {
    check_inputs(model, instance, background)?;
    let d = instance.len();
    let mut phi = vec![T::zero(); d];
    let mut state = PathState {
        side: vec![0; d],
        a: Vec::new(),
        b: Vec::new(),
    };
    let scale = model.learning_rate / T::from_count(background.len());
    for z in background {
        for tree in &model.trees {
            if !tree.nodes.is_empty() {
                traverse(tree, 0, instance, z, &mut state, scale, &mut phi);
            }
        }
    }
    Ok(Explanation {
        user_id: String::new(),
        base_value: mean_margin(model, background),
        contributions: phi,
        margin: model.margin_unchecked(instance),
    })
}

/// Explains many instances in parallel; output order follows `user_ids`
/// sorted ascending.
pub fn explain_batch<T: Scalar>(
    model: &TreeEnsemble<T>,
    instances: &[(String, Vec<T>)],
    background: &[Vec<T>],
) -> Result<Vec<Explanation<T>>, ShapleyError> {
    let mut out: Vec<Explanation<T>> = instances
        .par_iter()
        .map(|(id, x)| {
            shapley_tree(model, x, background).map(|mut e| {
                e.user_id = id.clone();
                e
            })
        })
        .collect::<Result<_, _>>()?;
    out.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub user_id: String,
    pub shap: f64,
    /// Feature value z-scored over the explained batch; `None` when missing.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub rank: usize,
    pub feature: String,
    pub index: usize,
    pub mean_abs_shap: f64,
    pub points: Vec<SummaryPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryData {
    pub n_explanations: usize,
    pub top_k: usize,
    pub features: Vec<FeatureSummary>,
}

/// Ranks features by mean |φ| and collects beeswarm points for the top `top_k`.
/// `values[i]` is the feature row behind `explanations[i]`.
pub fn summarize<T: Scalar>(
    explanations: &[Explanation<T>],
    values: &[Vec<T>],
    names: &[String],
    top_k: usize,
) -> Result<SummaryData, ShapleyError> {
    if explanations.is_empty() {
        return Err(ShapleyError::EmptyInput);
    }
    let d = names.len();
    let n = explanations.len() as f64;
    let mut ranking: Vec<(usize, f64)> = (0..d)
        .map(|j| {
            let s: f64 = explanations.iter().map(|e| e.contributions[j].as_f64().abs()).sum();
            (j, s / n)
        })
        .collect();
    ranking.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));

    let features = ranking
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(rank, (j, mean_abs))| {
            let col: Vec<T> = values.iter().map(|r| r[j]).collect();
            let stats = mean_std(&col);
            let points = explanations
                .iter()
                .zip(&col)
                .map(|(e, &v)| SummaryPoint {
                    user_id: e.user_id.clone(),
                    shap: e.contributions[j].as_f64(),
                    value: match (v.is_missing(), stats) {
                        (true, _) | (_, None) => None,
                        (false, Some((mu, sd))) => {
                            let sd = if sd > T::zero() { sd } else { T::one() };
                            Some(((v - mu) / sd).as_f64())
                        }
                    },
                })
                .collect();
            FeatureSummary {
                rank: rank + 1,
                feature: names[j].clone(),
                index: j,
                mean_abs_shap: mean_abs,
                points,
            }
        })
        .collect();
    Ok(SummaryData {
        n_explanations: explanations.len(),
        top_k,
        features,
    })
}
