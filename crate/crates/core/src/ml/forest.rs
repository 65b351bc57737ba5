//! Random forest: bootstrap-sampled, depth-limited Gini trees with sqrt(d)
//! feature subsampling per split. Each tree draws its own generator from the
//! master seed, so construction order cannot affect the result.

use crate::ml::tree::{SplitCriterion, Tree, TreeConfig};
use crate::rng::{mix_seed, SplitMix64};

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    /// 0 means unlimited.
    pub max_depth: usize,
    pub min_leaf: usize,
}

pub fn fit_forest(data: &[Vec<f64>], y: &[u8], params: &ForestParams, seed: u64) -> Vec<Tree> {
    let n = data.len();
    let d = data[0].len();
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let feature_subsample = (d as f64).sqrt().ceil() as usize;
    let config = TreeConfig {
        criterion: SplitCriterion::Gini,
        max_depth: if params.max_depth == 0 {
            usize::MAX
        } else {
            params.max_depth
        },
        min_leaf: params.min_leaf,
        feature_subsample: Some(feature_subsample.min(d)),
    };

    (0..params.n_trees)
        .map(|tree_idx| {
            let mut rng = SplitMix64::new(mix_seed(&[seed, tree_idx as u64, 0xF0EE57]));
            let bootstrap: Vec<usize> = (0..n)
                .map(|_| rng.next_bounded(n as u64) as usize)
                .collect();
            Tree::fit(data, &targets, &bootstrap, &config, &mut rng)
        })
        .collect()
}

/// Positive-class probability: the mean of per-tree leaf positive fractions.
pub fn forest_proba(trees: &[Tree], row: &[f64]) -> f64 {
    let sum: f64 = trees.iter().map(|t| t.predict(row)).sum();
    sum / trees.len() as f64
}
