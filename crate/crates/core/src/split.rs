//! Stratified partitions of sample indices.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("class {class} has {count} samples, fewer than the {parts} parts requested")]
    TooFewInClass { class: u8, count: usize, parts: usize },
    #[error("fractions must be positive and sum to 1, got {0:?}")]
    BadFractions(Vec<f64>),
    #[error("k must be at least 2, got {0}")]
    BadK(usize),
}

fn class_indices(labels: &[u8], seed: u64) -> Result<[Vec<usize>; 2], SplitError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        classes[usize::from(y == 1)].push(i);
    }
    if classes[0].is_empty() || classes[1].is_empty() {
        return Err(SplitError::SingleClass);
    }
    for c in &mut classes {
        c.shuffle(&mut rng);
    }
    Ok(classes)
}

/// Largest-remainder apportionment of `n` items over `fractions`.
fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Splits sample indices into `fractions.len()` parts preserving the class
/// ratio in every part. Each part is returned sorted ascending.
pub fn stratified_split(labels: &[u8], fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>, SplitError> {
    let sum: f64 = fractions.iter().sum();
    if fractions.is_empty() || fractions.iter().any(|&f| !(f > 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(SplitError::BadFractions(fractions.to_vec()));
    }
    let classes = class_indices(labels, seed)?;
    let mut parts = vec![Vec::new(); fractions.len()];
    for (class, idx) in classes.iter().enumerate() {
        if idx.len() < fractions.len() {
            return Err(SplitError::TooFewInClass {
                class: class as u8,
                count: idx.len(),
                parts: fractions.len(),
            });
        }
        let counts = apportion(idx.len(), fractions);
        let mut start = 0;
        for (part, &c) in parts.iter_mut().zip(&counts) {
            part.extend_from_slice(&idx[start..start + c]);
            start += c;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    Ok(parts)
}

/// `k` stratified validation folds covering every index exactly once.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, SplitError> {
    if k < 2 {
        return Err(SplitError::BadK(k));
    }
    let classes = class_indices(labels, seed)?;
    let mut folds = vec![Vec::new(); k];
    // Second class starts where the first stopped, so fold sizes differ by at most one.
    let mut offset = 0;
    for (class, idx) in classes.iter().enumerate() {
        if idx.len() < k {
            return Err(SplitError::TooFewInClass {
                class: class as u8,
                count: idx.len(),
                parts: k,
            });
        }
        for (i, &s) in idx.iter().enumerate() {
            folds[(i + offset) % k].push(s);
        }
        offset = (offset + idx.len()) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Complement of `part` within `0..n`, ascending.
pub fn complement(n: usize, part: &[usize]) -> Vec<usize> {
    let mut taken = vec![false; n];
    for &i in part {
        taken[i] = true;
    }
    (0..n).filter(|&i| !taken[i]).collect()
}
