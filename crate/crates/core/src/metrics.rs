//! Ranking and threshold metrics for binary scores.
//!
//! Labels are `1` for the positive class and `0` otherwise. All sweeps group
//! tied scores so that the result does not depend on input order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("{scores} scores for {labels} labels")]
    Length { scores: usize, labels: usize },
    #[error("metric needs both classes present")]
    SingleClass,
    #[error("metric needs at least one positive")]
    NoPositives,
    #[error("scores must not be NaN")]
    NanScore,
}

fn check<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<(), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::Length {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(MetricError::NanScore);
    }
    Ok(())
}

/// Indices sorted by score, ascending or descending.
fn order<T: Scalar>(scores: &[T], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    idx
}

/// Tie groups as (positives, negatives) counts in sorted order.
fn tie_groups<T: Scalar>(scores: &[T], labels: &[u8], descending: bool) -> Vec<(T, u64, u64)> {
    let idx = order(scores, descending);
    let mut groups: Vec<(T, u64, u64)> = Vec::new();
    for i in idx {
        let s = scores[i];
        let pos = u64::from(labels[i] == 1);
        match groups.last_mut() {
            Some(g) if g.0 == s => {
                g.1 += pos;
                g.2 += 1 - pos;
            }
            _ => groups.push((s, pos, 1 - pos)),
        }
    }
    groups
}

/// Area under the ROC curve as the Mann-Whitney statistic
/// `(concordant + ties / 2) / (P * N)`.
pub fn roc_auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64, MetricError> {
    check(scores, labels)?;
    let mut neg_below: u128 = 0;
    let mut concordant: u128 = 0;
    let mut tied: u128 = 0;
    let (mut p, mut n) = (0u128, 0u128);
    for (_, pos, neg) in tie_groups(scores, labels, false) {
        concordant += u128::from(pos) * neg_below;
        tied += u128::from(pos) * u128::from(neg);
        neg_below += u128::from(neg);
        p += u128::from(pos);
        n += u128::from(neg);
    }
    if p == 0 || n == 0 {
        return Err(MetricError::SingleClass);
    }
    // 2 * (concordant + tied / 2) stays integral.
    Ok((2 * concordant + tied) as f64 / (2 * p * n) as f64)
}

/// Average precision: `sum_n (R_n - R_{n-1}) * P_n` over descending tie groups.
pub fn pr_auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64, MetricError> {
    check(scores, labels)?;
    let total_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    if total_pos == 0.0 {
        return Err(MetricError::NoPositives);
    }
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for (_, pos, neg) in tie_groups(scores, labels, true) {
        tp += pos;
        fp += neg;
        let recall = tp as f64 / total_pos;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

/// Precision, recall and F1 when predicting positive for `score >= threshold`.
pub fn f1_at<T: Scalar>(scores: &[T], labels: &[u8], threshold: T) -> Result<ThresholdScores, MetricError> {
    check(scores, labels)?;
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(confusion_scores(tp, fp, fn_))
}

pub fn confusion_scores(tp: u64, fp: u64, fn_: u64) -> ThresholdScores {
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ThresholdScores {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

/// ROC points (x = false positive rate, y = true positive rate), starting at
/// the origin and sweeping thresholds from high to low.
pub fn roc_curve<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<Vec<CurvePoint>, MetricError> {
    check(scores, labels)?;
    let p = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n = labels.len() as f64 - p;
    if p == 0.0 || n == 0.0 {
        return Err(MetricError::SingleClass);
    }
    let mut pts = vec![CurvePoint {
        threshold: f64::INFINITY,
        x: 0.0,
        y: 0.0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (s, pos, neg) in tie_groups(scores, labels, true) {
        tp += pos;
        fp += neg;
        pts.push(CurvePoint {
            threshold: s.as_f64(),
            x: fp as f64 / n,
            y: tp as f64 / p,
        });
    }
    Ok(pts)
}

/// Precision-recall points (x = recall, y = precision) per descending threshold.
pub fn pr_curve<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<Vec<CurvePoint>, MetricError> {
    check(scores, labels)?;
    let p = labels.iter().filter(|&&y| y == 1).count() as f64;
    if p == 0.0 {
        return Err(MetricError::NoPositives);
    }
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut pts = Vec::new();
    for (s, pos, neg) in tie_groups(scores, labels, true) {
        tp += pos;
        fp += neg;
        pts.push(CurvePoint {
            threshold: s.as_f64(),
            x: tp as f64 / p,
            y: tp as f64 / (tp + fp) as f64,
        });
    }
    Ok(pts)
}

/// The metric bundle reported per evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub pr_auc: f64,
    pub roc_auc: f64,
}

impl RunMetrics {
    pub fn compute<T: Scalar>(scores: &[T], labels: &[u8], threshold: T) -> Result<Self, MetricError> {
        let t = f1_at(scores, labels, threshold)?;
        Ok(Self {
            f1: t.f1,
            precision: t.precision,
            recall: t.recall,
            pr_auc: pr_auc(scores, labels)?,
            roc_auc: roc_auc(scores, labels)?,
        })
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.f1, self.precision, self.recall, self.pr_auc, self.roc_auc]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            f1: a[0],
            precision: a[1],
            recall: a[2],
            pr_auc: a[3],
            roc_auc: a[4],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roc_hand_cases() {
        let s = [0.9f64, 0.8, 0.3, 0.1];
        assert_eq!(roc_auc(&s, &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(roc_auc(&s, &[1, 0, 1, 0]).unwrap(), 0.75);
        assert_eq!(roc_auc(&[0.5f64; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert_eq!(roc_auc(&s, &[1, 1, 1, 1]), Err(MetricError::SingleClass));
    }

    #[test]
    fn ap_hand_cases() {
        let s = [0.9f64, 0.8, 0.3, 0.1];
        assert_eq!(pr_auc(&s, &[1, 1, 0, 0]).unwrap(), 1.0);
        let ap = pr_auc(&s, &[1, 0, 1, 0]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(pr_auc(&s, &[0, 0, 0, 0]), Err(MetricError::NoPositives));
    }

    #[test]
    fn ap_groups_ties() {
        // one tie group holding everything: precision = prevalence
        let ap = pr_auc(&[0.2f64; 4], &[1, 0, 0, 0]).unwrap();
        assert_eq!(ap, 0.25);
    }

    #[test]
    fn f1_conventions() {
        // TP=8, FP=2, FN=2
        let mut scores = vec![0.9f64; 10];
        let mut labels = vec![1u8; 8];
        labels.extend([0, 0]);
        scores.extend([0.1, 0.1]);
        labels.extend([1, 1]);
        let t = f1_at(&scores, &labels, 0.5).unwrap();
        assert!((t.precision - 0.8).abs() < 1e-15);
        assert!((t.recall - 0.8).abs() < 1e-15);
        assert!((t.f1 - 0.8).abs() < 1e-15);

        let t = f1_at(&[0.1f64, 0.2], &[1, 0], 0.5).unwrap();
        assert_eq!((t.precision, t.f1), (0.0, 0.0));
        let t = f1_at(&[0.9f64, 0.2], &[1, 0], 0.5).unwrap();
        assert_eq!(t.f1, 1.0);
    }

    #[test]
    fn curves_end_at_full_recall() {
        let s = [0.9f64, 0.8, 0.3, 0.1];
        let y = [1, 0, 1, 0];
        let roc = roc_curve(&s, &y).unwrap();
        assert_eq!(roc.first().map(|p| (p.x, p.y)), Some((0.0, 0.0)));
        assert_eq!(roc.last().map(|p| (p.x, p.y)), Some((1.0, 1.0)));
        let pr = pr_curve(&s, &y).unwrap();
        assert_eq!(pr.last().unwrap().x, 1.0);
        assert_eq!(pr.len(), 4);
    }
}
