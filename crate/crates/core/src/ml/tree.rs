//! Decision tree shared by the random forest (Gini splitting on class
//! labels) and gradient boosting (variance splitting on residuals).
//!
//! Split selection is fully deterministic: features are scanned in ascending
//! index order, candidate thresholds are midpoints between consecutive
//! distinct sorted values, and only a strictly better impurity decrease
//! replaces the incumbent, so the first optimum in scan order wins ties.

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        n_samples: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitCriterion {
    /// Binary Gini impurity; targets must be 0.0 or 1.0 and leaves store the
    /// positive fraction.
    Gini,
    /// Sum-of-squared-error reduction; leaves store the target mean.
    Variance,
}

#[derive(Debug, Clone)]
pub struct TreeConfig {
    pub criterion: SplitCriterion,
    /// usize::MAX means unlimited.
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Number of features drawn per split; None scans all features.
    pub feature_subsample: Option<usize>,
}

impl Tree {
    /// Grow a tree over `indices` of the row-major data. The RNG is only
    /// consulted when `feature_subsample` is set.
    pub fn fit(
        data: &[Vec<f64>],
        targets: &[f64],
        indices: &[usize],
        config: &TreeConfig,
        rng: &mut SplitMix64,
    ) -> Self {
        let mut nodes = Vec::new();
        build(data, targets, indices, config, rng, 0, &mut nodes);
        Self { nodes }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    /// Index of the leaf node this row routes to.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { .. } => return idx,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

fn leaf_value(targets: &[f64], indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    indices.iter().map(|&i| targets[i]).sum::<f64>() / indices.len() as f64
}

#[allow(clippy::too_many_arguments)]
fn build(
    data: &[Vec<f64>],
    targets: &[f64],
    indices: &[usize],
    config: &TreeConfig,
    rng: &mut SplitMix64,
    depth: usize,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let make_leaf = |nodes: &mut Vec<TreeNode>| {
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf {
            value: leaf_value(targets, indices),
            n_samples: indices.len(),
        });
        idx
    };

    if depth >= config.max_depth || indices.len() < 2 * config.min_leaf.max(1) {
        return make_leaf(nodes);
    }
    let first = targets[indices[0]];
    if indices.iter().all(|&i| targets[i] == first) {
        return make_leaf(nodes);
    }

    let n_features = data[0].len();
    let candidate_features: Vec<usize> = match config.feature_subsample {
        Some(m) if m < n_features => {
            let mut picked = rng.sample_indices(n_features, m);
            picked.sort_unstable();
            picked
        }
        _ => (0..n_features).collect(),
    };

    let Some((feature, threshold)) =
        best_split(data, targets, indices, &candidate_features, config)
    else {
        return make_leaf(nodes);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| data[i][feature] <= threshold);
    if left_idx.is_empty() || right_idx.is_empty() {
        return make_leaf(nodes);
    }

    let node_idx = nodes.len();
    nodes.push(TreeNode::Leaf {
        value: 0.0,
        n_samples: 0,
    }); // placeholder until children exist
    let left = build(data, targets, &left_idx, config, rng, depth + 1, nodes);
    let right = build(data, targets, &right_idx, config, rng, depth + 1, nodes);
    nodes[node_idx] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    node_idx
}

/// Best (feature, threshold) by impurity decrease, or None when no valid
/// split improves on the parent.
fn best_split(
    data: &[Vec<f64>],
    targets: &[f64],
    indices: &[usize],
    candidate_features: &[usize],
    config: &TreeConfig,
) -> Option<(usize, f64)> {
    let n = indices.len();
    let min_leaf = config.min_leaf.max(1);
    let parent_score = impurity_sum(targets, indices, config.criterion);

    let mut best: Option<(usize, f64)> = None;
    let mut best_decrease = 1e-12;

    for &feature in candidate_features {
        let mut pairs: Vec<(f64, f64)> = indices
            .iter()
            .map(|&i| (data[i][feature], targets[i]))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));

        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
        let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();

        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            left_sq += pairs[i].1 * pairs[i].1;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let left_n = i + 1;
            let right_n = n - left_n;
            if left_n < min_leaf || right_n < min_leaf {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let child_score = match config.criterion {
                SplitCriterion::Gini => gini_sum(left_sum, left_n) + gini_sum(right_sum, right_n),
                SplitCriterion::Variance => {
                    sse(left_sum, left_sq, left_n) + sse(right_sum, right_sq, right_n)
                }
            };
            let decrease = parent_score - child_score;
            if decrease > best_decrease {
                best_decrease = decrease;
                best = Some((feature, (pairs[i].0 + pairs[i + 1].0) / 2.0));
            }
        }
    }
    best
}

fn impurity_sum(targets: &[f64], indices: &[usize], criterion: SplitCriterion) -> f64 {
    let n = indices.len();
    let sum: f64 = indices.iter().map(|&i| targets[i]).sum();
    match criterion {
        SplitCriterion::Gini => gini_sum(sum, n),
        SplitCriterion::Variance => {
            let sq: f64 = indices.iter().map(|&i| targets[i] * targets[i]).sum();
            sse(sum, sq, n)
        }
    }
}

/// Gini impurity times sample count: n * (1 - p^2 - (1-p)^2) = 2 * pos * neg / n.
fn gini_sum(pos_sum: f64, n: usize) -> f64 {
    let n = n as f64;
    2.0 * pos_sum * (n - pos_sum) / n
}

/// Sum of squared errors around the mean.
fn sse(sum: f64, sq: f64, n: usize) -> f64 {
    sq - sum * sum / n as f64
}
