//! Random model and data generators for property tests and benchmarks.

use rand::Rng;

use crate::booster::{Node, Tree, TreeEnsemble};
use crate::feature_spec::FeatureSpec;
use crate::scalar::Scalar;

/// Shape limits for [`random_ensemble`].
#[derive(Debug, Clone, Copy)]
pub struct EnsembleShape {
    pub max_trees: usize,
    pub max_depth: usize,
    pub n_features: usize,
}

fn random_tree<T: Scalar, R: Rng>(rng: &mut R, depth_left: usize, n_features: usize, nodes: &mut Vec<Node<T>>) -> usize {
    let id = nodes.len();
    // Leaves become likelier as depth is used up.
    if depth_left == 0 || rng.gen_bool(0.2) {
        nodes.push(Node::Leaf {
            weight: T::lit(rng.gen_range(-2.0..2.0)),
            cover: T::one(),
        });
        return id;
    }
    nodes.push(Node::Leaf {
        weight: T::zero(),
        cover: T::zero(),
    });
    let feature = rng.gen_range(0..n_features);
    // Coarse thresholds make hybrid paths disagree often.
    let threshold = T::lit((rng.gen_range(-4..=4) as f64) * 0.5);
    let default_left = rng.gen_bool(0.5);
    let left = random_tree(rng, depth_left - 1, n_features, nodes);
    let right = random_tree(rng, depth_left - 1, n_features, nodes);
    nodes[id] = Node::Split {
        feature,
        threshold,
        default_left,
        left,
        right,
        gain: T::one(),
        cover: T::one(),
    };
    id
}

/// Ensemble with `1..=max_trees` trees of depth at most `max_depth`.
pub fn random_ensemble<T: Scalar, R: Rng>(rng: &mut R, shape: EnsembleShape) -> TreeEnsemble<T> {
    let mut model = TreeEnsemble::new(
        FeatureSpec::anonymous(shape.n_features),
        T::lit(rng.gen_range(-1.0..1.0)),
        T::lit(rng.gen_range(0.05..1.0)),
    );
    let n_trees = rng.gen_range(1..=shape.max_trees);
    for _ in 0..n_trees {
        let mut nodes = Vec::new();
        random_tree(rng, shape.max_depth, shape.n_features, &mut nodes);
        model.trees.push(Tree { nodes });
    }
    model
}

/// Row of values on the same coarse grid as the thresholds, with some
/// entries missing.
pub fn random_row<T: Scalar, R: Rng>(rng: &mut R, n_features: usize, missing_rate: f64) -> Vec<T> {
    (0..n_features)
        .map(|_| {
            if rng.gen_bool(missing_rate) {
                T::missing()
            } else {
                T::lit(rng.gen_range(-5.0..5.0))
            }
        })
        .collect()
}
