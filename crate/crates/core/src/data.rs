//! Dense row-major sample matrices with binary labels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DataError {
    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("{labels} labels for {rows} rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("label {0} is not binary")]
    NonBinaryLabel(u8),
}

/// A labeled sample set. Column `j` of every row refers to the same feature;
/// NaN marks a missing value.
///
/// Each row carries a stable id used for deterministic ordering, and a flag
/// marking rows synthesized by the resampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    n_cols: usize,
    values: Vec<T>,
    labels: Vec<u8>,
    ids: Vec<u64>,
    synthetic: Vec<bool>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            values: Vec::new(),
            labels: Vec::new(),
            ids: Vec::new(),
            synthetic: Vec::new(),
        }
    }

    /// Builds a dataset from rows, assigning ids `0..n`.
    pub fn from_rows(rows: &[Vec<T>], labels: &[u8]) -> Result<Self, DataError> {
        if rows.len() != labels.len() {
            return Err(DataError::LabelCount {
                labels: labels.len(),
                rows: rows.len(),
            });
        }
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut ds = Self::new(n_cols);
        for (i, (row, &y)) in rows.iter().zip(labels).enumerate() {
            ds.push(row, y, i as u64, false)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, row: &[T], label: u8, id: u64, synthetic: bool) -> Result<(), DataError> {
        if row.len() != self.n_cols {
            return Err(DataError::RaggedRow {
                row: self.labels.len(),
                got: row.len(),
                expected: self.n_cols,
            });
        }
        if label > 1 {
            return Err(DataError::NonBinaryLabel(label));
        }
        self.values.extend_from_slice(row);
        self.labels.push(label);
        self.ids.push(id);
        self.synthetic.push(synthetic);
        Ok(())
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> T {
        self.values[row * self.n_cols + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> u64 {
        self.ids[i]
    }

    pub fn is_synthetic(&self, i: usize) -> bool {
        self.synthetic[i]
    }

    pub fn synthetic_count(&self) -> usize {
        self.synthetic.iter().filter(|&&s| s).count()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.n_rows() - self.positives()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.n_rows()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut out = Self::new(self.n_cols);
        out.values.reserve(indices.len() * self.n_cols);
        for &i in indices {
            out.values.extend_from_slice(self.row(i));
            out.labels.push(self.labels[i]);
            out.ids.push(self.ids[i]);
            out.synthetic.push(self.synthetic[i]);
        }
        out
    }

    /// Column-wise projection keeping only the columns where `mask` is true.
    pub fn project(&self, mask: &[bool]) -> Self {
        let cols: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter_map(|(j, &m)| m.then_some(j))
            .collect();
        let mut out = Self::new(cols.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            out.values.extend(cols.iter().map(|&j| row[j]));
        }
        out.labels = self.labels.clone();
        out.ids = self.ids.clone();
        out.synthetic = self.synthetic.clone();
        out
    }

    /// Multiplies column `col` by `factor` in place (missing stays missing).
    pub fn scale_column(&mut self, col: usize, factor: T) {
        for i in 0..self.n_rows() {
            let v = &mut self.values[i * self.n_cols + col];
            *v = *v * factor;
        }
    }

    pub fn column(&self, col: usize) -> Vec<T> {
        (0..self.n_rows()).map(|i| self.value(i, col)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_are_rejected() {
        let err = Dataset::<f64>::from_rows(&[vec![1.0, 2.0], vec![3.0]], &[0, 1]).unwrap_err();
        assert_eq!(
            err,
            DataError::RaggedRow {
                row: 1,
                got: 1,
                expected: 2
            }
        );
    }

    #[test]
    fn subset_and_project_keep_metadata() {
        let ds = Dataset::from_rows(&[vec![1.0f64, 2.0, 3.0], vec![4.0, 5.0, 6.0]], &[0, 1]).unwrap();
        let s = ds.subset(&[1]);
        assert_eq!(s.row(0), &[4.0, 5.0, 6.0]);
        assert_eq!(s.ids(), &[1]);
        let p = ds.project(&[true, false, true]);
        assert_eq!(p.row(1), &[4.0, 6.0]);
        assert_eq!(p.labels(), &[0, 1]);
    }
}
