use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// One node of a regression tree. Children are indices into the owning
/// tree's node vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum Node<T> {
    Split {
        feature: usize,
        /// Values strictly below the threshold go left.
        #[serde(with = "crate::scalar::ext_float")]
        threshold: T,
        /// Direction taken when the feature is missing.
        default_left: bool,
        left: usize,
        right: usize,
        /// Accepted loss reduction of this split (net of gamma).
        gain: T,
        /// Hessian sum of the training rows that reached the node.
        cover: T,
    },
    Leaf {
        weight: T,
        cover: T,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    /// Single-leaf tree.
    pub fn leaf(weight: T) -> Self {
        Self {
            nodes: vec![Node::Leaf {
                weight,
                cover: T::zero(),
            }],
        }
    }

    /// Decision stump on one feature.
    pub fn stump(feature: usize, threshold: T, default_left: bool, left: T, right: T) -> Self {
        Self {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left: 1,
                    right: 2,
                    gain: T::zero(),
                    cover: T::zero(),
                },
                Node::Leaf {
                    weight: left,
                    cover: T::zero(),
                },
                Node::Leaf {
                    weight: right,
                    cover: T::zero(),
                },
            ],
        }
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_index(&self, row: &[T]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { .. } => return idx,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    idx = if goes_left(row[*feature], *threshold, *default_left) {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Raw (unshrunk) leaf weight for `row`.
    pub fn predict(&self, row: &[T]) -> T {
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { weight, .. } => *weight,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }

    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

/// Routing rule shared by prediction and attribution.
#[inline]
pub fn goes_left<T: Scalar>(value: T, threshold: T, default_left: bool) -> bool {
    if value.is_missing() {
        default_left
    } else {
        value < threshold
    }
}
