//! Second-order logistic objective and the closed forms derived from it.

use thiserror::Error;

use crate::scalar::{sigmoid, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("degenerate leaf: hessian sum plus lambda is zero")]
    DegenerateLeaf,
}

/// Gradient and hessian of the logistic loss at `margin` for label `y`.
#[inline]
pub fn logistic_grad_hess<T: Scalar>(y: u8, margin: T) -> (T, T) {
    let p = sigmoid(margin);
    let target = if y == 1 { T::one() } else { T::zero() };
    (p - target, p * (T::one() - p))
}

/// Optimal leaf weight `-G / (H + lambda)`.
pub fn leaf_weight<T: Scalar>(grad_sum: T, hess_sum: T, lambda: T) -> Result<T, ObjectiveError> {
    let denom = hess_sum + lambda;
    if denom == T::zero() {
        if grad_sum == T::zero() {
            return Ok(T::zero());
        }
        return Err(ObjectiveError::DegenerateLeaf);
    }
    Ok(-grad_sum / denom)
}

#[inline]
fn structure_score<T: Scalar>(g: T, h: T, lambda: T) -> T {
    let denom = h + lambda;
    if denom <= T::zero() {
        T::zero()
    } else {
        g * g / denom
    }
}

/// Loss reduction of splitting a node into (L, R), net of the complexity
/// penalty `gamma`. A split is only worth taking when this is positive.
pub fn split_gain<T: Scalar>(gl: T, hl: T, gr: T, hr: T, lambda: T, gamma: T) -> T {
    let half = T::lit(0.5);
    half * (structure_score(gl, hl, lambda) + structure_score(gr, hr, lambda)
        - structure_score(gl + gr, hl + hr, lambda))
        - gamma
}

/// Mean binary cross-entropy of margins against labels.
pub fn logloss<T: Scalar>(labels: &[u8], margins: &[T]) -> T {
    if labels.is_empty() {
        return T::zero();
    }
    // log(1 + e^{-m}) for y=1 and log(1 + e^{m}) for y=0, computed stably.
    let softplus = |x: T| -> T {
        if x > T::zero() {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    };
    let total: T = labels
        .iter()
        .zip(margins)
        .map(|(&y, &m)| if y == 1 { softplus(-m) } else { softplus(m) })
        .sum();
    total / T::from_count(labels.len())
}
