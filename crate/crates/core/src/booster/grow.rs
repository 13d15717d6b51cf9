//! Depth-wise exact greedy tree growth with sparsity-aware split finding.
//!
//! Every feature is presorted once per training run. Each tree level then
//! scans every candidate feature in sorted order, accumulating gradient
//! statistics for all open nodes at once. Missing values are excluded from
//! the scan; their statistics are routed to whichever side maximizes gain.

use super::objective::{leaf_weight, split_gain};
use super::tree::{Node, Tree};
use crate::data::Dataset;
use crate::scalar::Scalar;

/// Rows of one feature with a present value, sorted ascending by value
/// (ties by row index).
pub(crate) struct SortedColumns {
    cols: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub(crate) fn build<T: Scalar>(data: &Dataset<T>, features: &[usize]) -> Self {
        let mut cols = vec![Vec::new(); data.n_cols()];
        for &j in features {
            let mut idx: Vec<u32> = (0..data.n_rows() as u32)
                .filter(|&r| !data.value(r as usize, j).is_missing())
                .collect();
            idx.sort_by(|&a, &b| {
                data.value(a as usize, j)
                    .partial_cmp(&data.value(b as usize, j))
                    .expect("non-missing values are ordered")
                    .then(a.cmp(&b))
            });
            cols[j] = idx;
        }
        Self { cols }
    }
}

pub(crate) struct GrowParams<T> {
    pub max_depth: usize,
    pub lambda: T,
    pub gamma: T,
    pub min_child_weight: T,
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    gain: T,
    feature: usize,
    threshold: T,
    default_left: bool,
}

struct OpenNode<T> {
    id: usize,
    depth: usize,
    grad: T,
    hess: T,
}

const NOT_SAMPLED: u32 = u32::MAX;

/// Grows one tree on the rows flagged in `in_sample`, restricted to `features`.
pub(crate) fn grow_tree<T: Scalar>(
    data: &Dataset<T>,
    sorted: &SortedColumns,
    grad: &[T],
    hess: &[T],
    in_sample: &[bool],
    features: &[usize],
    params: &GrowParams<T>,
) -> Tree<T> {
    let n = data.n_rows();
    // position[r] = index of the open node containing row r
    let mut position = vec![NOT_SAMPLED; n];
    let (mut g0, mut h0) = (T::zero(), T::zero());
    for r in 0..n {
        if in_sample[r] {
            position[r] = 0;
            g0 = g0 + grad[r];
            h0 = h0 + hess[r];
        }
    }

    let mut nodes: Vec<Node<T>> = vec![Node::Leaf {
        weight: T::zero(),
        cover: h0,
    }];
    let mut open = vec![OpenNode {
        id: 0,
        depth: 0,
        grad: g0,
        hess: h0,
    }];

    while !open.is_empty() {
        let expandable: Vec<bool> = open.iter().map(|o| o.depth < params.max_depth).collect();
        let best = if expandable.iter().any(|&e| e) {
            find_splits(data, sorted, grad, hess, &position, &open, &expandable, features, params)
        } else {
            vec![None; open.len()]
        };

        // Materialize this level. Children of the k-th open node are appended
        // in order so node numbering is deterministic.
        let mut next_open = Vec::new();
        let mut child_slot: Vec<Option<(u32, u32)>> = vec![None; open.len()];
        for (k, node) in open.iter().enumerate() {
            match best[k] {
                Some(c) => {
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf {
                        weight: T::zero(),
                        cover: T::zero(),
                    });
                    nodes.push(Node::Leaf {
                        weight: T::zero(),
                        cover: T::zero(),
                    });
                    nodes[node.id] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        default_left: c.default_left,
                        left,
                        right,
                        gain: c.gain,
                        cover: node.hess,
                    };
                    let lk = next_open.len() as u32;
                    next_open.push(OpenNode {
                        id: left,
                        depth: node.depth + 1,
                        grad: T::zero(),
                        hess: T::zero(),
                    });
                    next_open.push(OpenNode {
                        id: right,
                        depth: node.depth + 1,
                        grad: T::zero(),
                        hess: T::zero(),
                    });
                    child_slot[k] = Some((lk, lk + 1));
                }
                None => {
                    let weight = leaf_weight(node.grad, node.hess, params.lambda).unwrap_or(T::zero());
                    nodes[node.id] = Node::Leaf {
                        weight,
                        cover: node.hess,
                    };
                }
            }
        }

        // Route rows into the new level.
        for r in 0..n {
            let k = position[r];
            if k == NOT_SAMPLED {
                continue;
            }
            match child_slot[k as usize] {
                None => position[r] = NOT_SAMPLED,
                Some((l, rr)) => {
                    let (feature, threshold, default_left) = match &nodes[open[k as usize].id] {
                        Node::Split {
                            feature,
                            threshold,
                            default_left,
                            ..
                        } => (*feature, *threshold, *default_left),
                        Node::Leaf { .. } => unreachable!(),
                    };
                    let left = super::tree::goes_left(data.value(r, feature), threshold, default_left);
                    let slot = if left { l } else { rr };
                    position[r] = slot;
                    let o = &mut next_open[slot as usize];
                    o.grad = o.grad + grad[r];
                    o.hess = o.hess + hess[r];
                }
            }
        }
        open = next_open;
    }

    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn find_splits<T: Scalar>(
    data: &Dataset<T>,
    sorted: &SortedColumns,
    grad: &[T],
    hess: &[T],
    position: &[u32],
    open: &[OpenNode<T>],
    expandable: &[bool],
    features: &[usize],
    params: &GrowParams<T>,
) -> Vec<Option<Candidate<T>>> {
    let k = open.len();
    let mut best: Vec<Option<Candidate<T>>> = vec![None; k];

    let mut present_g = vec![T::zero(); k];
    let mut present_h = vec![T::zero(); k];
    let mut present_n = vec![0usize; k];
    let mut node_n = vec![0usize; k];
    for r in 0..data.n_rows() {
        let p = position[r];
        if p != NOT_SAMPLED {
            node_n[p as usize] += 1;
        }
    }

    let mut scan_g = vec![T::zero(); k];
    let mut scan_h = vec![T::zero(); k];
    let mut last: Vec<Option<T>> = vec![None; k];

    for &j in features {
        let col = &sorted.cols[j];
        present_g.iter_mut().for_each(|v| *v = T::zero());
        present_h.iter_mut().for_each(|v| *v = T::zero());
        present_n.iter_mut().for_each(|v| *v = 0);
        for &r in col {
            let p = position[r as usize];
            if p == NOT_SAMPLED || !expandable[p as usize] {
                continue;
            }
            let p = p as usize;
            present_g[p] = present_g[p] + grad[r as usize];
            present_h[p] = present_h[p] + hess[r as usize];
            present_n[p] += 1;
        }

        scan_g.iter_mut().for_each(|v| *v = T::zero());
        scan_h.iter_mut().for_each(|v| *v = T::zero());
        last.iter_mut().for_each(|v| *v = None);

        for &r in col {
            let p = position[r as usize];
            if p == NOT_SAMPLED || !expandable[p as usize] {
                continue;
            }
            let p = p as usize;
            let v = data.value(r as usize, j);
            if let Some(prev) = last[p] {
                if v > prev {
                    let threshold = midpoint(prev, v);
                    consider(
                        &mut best[p],
                        j,
                        threshold,
                        scan_g[p],
                        scan_h[p],
                        &open[p],
                        present_g[p],
                        present_h[p],
                        params,
                    );
                }
            }
            scan_g[p] = scan_g[p] + grad[r as usize];
            scan_h[p] = scan_h[p] + hess[r as usize];
            last[p] = Some(v);
        }

        // All present values on one side, missing ones on the other.
        for p in 0..k {
            if expandable[p] && present_n[p] > 0 && present_n[p] < node_n[p] {
                consider(
                    &mut best[p],
                    j,
                    T::infinity(),
                    present_g[p],
                    present_h[p],
                    &open[p],
                    present_g[p],
                    present_h[p],
                    params,
                );
            }
        }
    }
    best
}

/// Evaluates both default directions of a split whose present-value left
/// side has statistics (`gl`, `hl`).
#[allow(clippy::too_many_arguments)]
#[inline]
fn consider<T: Scalar>(
    best: &mut Option<Candidate<T>>,
    feature: usize,
    threshold: T,
    gl: T,
    hl: T,
    node: &OpenNode<T>,
    present_g: T,
    present_h: T,
    params: &GrowParams<T>,
) {
    let miss_g = node.grad - present_g;
    let miss_h = node.hess - present_h;
    for default_left in [true, false] {
        let (lg, lh) = if default_left {
            (gl + miss_g, hl + miss_h)
        } else {
            (gl, hl)
        };
        let (rg, rh) = (node.grad - lg, node.hess - lh);
        if lh < params.min_child_weight || rh < params.min_child_weight {
            continue;
        }
        // Empty children arise only for the all-missing partition.
        if lh <= T::zero() || rh <= T::zero() {
            continue;
        }
        let gain = split_gain(lg, lh, rg, rh, params.lambda, params.gamma);
        if !(gain > T::zero()) {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => gain > b.gain,
        };
        if better {
            *best = Some(Candidate {
                gain,
                feature,
                threshold,
                default_left,
            });
        }
    }
}

/// A threshold strictly above `lo` and at most `hi`.
#[inline]
fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    let m = lo + (hi - lo) * T::lit(0.5);
    if m > lo && m.is_finite() {
        m
    } else {
        hi
    }
}
