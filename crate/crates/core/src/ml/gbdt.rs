//! Gradient-boosted trees with the logistic loss.
//!
//! F_0 is the log-odds of the training positive rate. Each round fits a
//! variance-splitting regression tree to the pseudo-residuals y - sigmoid(F),
//! replaces leaf values with the Newton step sum(r) / sum(p (1 - p)), and
//! adds the shrunken tree to the ensemble. No row or feature subsampling, so
//! a hand-rolled boosting computation can reproduce the model exactly.

use serde::{Deserialize, Serialize};

use crate::ml::logistic::sigmoid;
use crate::ml::tree::{SplitCriterion, Tree, TreeConfig, TreeNode};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GbdtModel {
    pub init_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

pub fn fit_gbdt(data: &[Vec<f64>], y: &[u8], params: &GbdtParams, _seed: u64) -> GbdtModel {
    let n = data.len();
    let indices: Vec<usize> = (0..n).collect();
    let pos_rate =
        (y.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64).clamp(1e-8, 1.0 - 1e-8);
    let init_score = (pos_rate / (1.0 - pos_rate)).ln();

    let config = TreeConfig {
        criterion: SplitCriterion::Variance,
        max_depth: params.max_depth.max(1),
        min_leaf: 1,
        feature_subsample: None,
    };
    // The builder only consults the RNG for feature subsampling, which is
    // off here; boosting is fully deterministic.
    let mut rng = SplitMix64::new(0);

    let mut scores = vec![init_score; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let probs: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        let residuals: Vec<f64> = y
            .iter()
            .zip(&probs)
            .map(|(&label, &p)| f64::from(label) - p)
            .collect();

        let mut tree = Tree::fit(data, &residuals, &indices, &config, &mut rng);
        newton_leaf_update(&mut tree, data, &residuals, &probs, &indices);

        for (i, score) in scores.iter_mut().enumerate() {
            *score += params.learning_rate * tree.predict(&data[i]);
        }
        trees.push(tree);
    }
    GbdtModel {
        init_score,
        learning_rate: params.learning_rate,
        trees,
    }
}

/// Replace mean-residual leaf values with the Newton step
/// sum(residuals) / sum(p (1 - p)) over the training rows in each leaf.
fn newton_leaf_update(
    tree: &mut Tree,
    data: &[Vec<f64>],
    residuals: &[f64],
    probs: &[f64],
    indices: &[usize],
) {
    let mut numer = vec![0.0; tree.nodes.len()];
    let mut denom = vec![0.0; tree.nodes.len()];
    for &i in indices {
        let leaf = tree.leaf_index(&data[i]);
        numer[leaf] += residuals[i];
        denom[leaf] += (probs[i] * (1.0 - probs[i])).max(1e-12);
    }
    for (idx, node) in tree.nodes.iter_mut().enumerate() {
        if let TreeNode::Leaf { value, .. } = node {
            if denom[idx] > 0.0 {
                *value = numer[idx] / denom[idx];
            }
        }
    }
}

pub fn gbdt_raw_score(model: &GbdtModel, row: &[f64]) -> f64 {
    let mut score = model.init_score;
    for tree in &model.trees {
        score += model.learning_rate * tree.predict(row);
    }
    score
}

pub fn gbdt_proba(model: &GbdtModel, row: &[f64]) -> f64 {
    sigmoid(gbdt_raw_score(model, row))
}
