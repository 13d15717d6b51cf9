use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("{names} names but {categories} category tags")]
    Length { names: usize, categories: usize },
    #[error("duplicate feature name `{0}`")]
    DuplicateName(String),
    #[error("mask has {got} entries, expected {expected}")]
    MaskLength { got: usize, expected: usize },
}

/// Ordered feature names with a category tag each, plus the mask of slots a
/// model is allowed to split on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    names: Vec<String>,
    categories: Vec<String>,
    mask: Vec<bool>,
}

impl FeatureSpec {
    pub fn new(names: Vec<String>, categories: Vec<String>) -> Result<Self, SpecError> {
        if names.len() != categories.len() {
            return Err(SpecError::Length {
                names: names.len(),
                categories: categories.len(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(SpecError::DuplicateName(n.clone()));
            }
        }
        let mask = vec![true; names.len()];
        Ok(Self {
            names,
            categories,
            mask,
        })
    }

    /// Spec with generated names `f0..f{n-1}` in a single category.
    pub fn anonymous(n: usize) -> Self {
        Self {
            names: (0..n).map(|i| format!("f{i}")).collect(),
            categories: vec!["generic".to_owned(); n],
            mask: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self, SpecError> {
        if mask.len() != self.names.len() {
            return Err(SpecError::MaskLength {
                got: mask.len(),
                expected: self.names.len(),
            });
        }
        Ok(Self {
            mask,
            ..self.clone()
        })
    }

    /// Number of slots per category, in first-appearance order of the tags.
    pub fn category_counts(&self) -> Vec<(String, usize)> {
        let mut order: Vec<String> = Vec::new();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &self.categories {
            if !counts.contains_key(c.as_str()) {
                order.push(c.clone());
            }
            *counts.entry(c.as_str()).or_default() += 1;
        }
        order
            .into_iter()
            .map(|c| {
                let n = counts[c.as_str()];
                (c, n)
            })
            .collect()
    }

    /// Active slots per category.
    pub fn active_category_counts(&self) -> Vec<(String, usize)> {
        self.category_counts()
            .into_iter()
            .map(|(c, _)| {
                let n = self
                    .categories
                    .iter()
                    .zip(&self.mask)
                    .filter(|(cat, &m)| m && **cat == c)
                    .count();
                (c, n)
            })
            .collect()
    }
}
