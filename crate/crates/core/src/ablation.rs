//! Feature-importance analyses: group ablation, single-feature evaluation,
//! leave-one-out removal ranking, and Pearson correlation.
//!
//! Every ablated feature set is re-tuned from scratch (the grid search runs
//! inside `run_cv`), so a removal is never penalized by stale
//! hyperparameters.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Task};
use crate::eval::{run_cv, CVReport, CvConfig, EvalError, Pipeline};
use crate::ml::ClassifierSpec;
use crate::store::FeatureStore;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationResult {
    /// Feature or group that was removed (leave-one-out, groups) or isolated
    /// (single-feature runs).
    pub removed_or_isolated: String,
    pub metric_name: String,
    pub metric_full: f64,
    pub metric_ablated: f64,
    /// metric_full - metric_ablated.
    pub delta: f64,
    pub task: Task,
    pub pipeline: Pipeline,
}

#[derive(Debug, thiserror::Error)]
pub enum AblationError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("feature group {0} is empty")]
    EmptyFeatureGroup(String),
    #[error("pearson correlation needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("pearson correlation input v{0} has zero variance")]
    ZeroVariance(u8),
    #[error("inputs differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

fn full_run(
    dataset: &Dataset,
    store: &FeatureStore,
    task: Task,
    spec: &ClassifierSpec,
    config: &CvConfig,
) -> Result<CVReport, AblationError> {
    Ok(run_cv(
        dataset,
        Some(store),
        task,
        Pipeline::FeaturesMl,
        Some(spec),
        config,
    )?)
}

fn with_columns(config: &CvConfig, columns: Vec<String>) -> CvConfig {
    CvConfig {
        columns: Some(columns),
        ..config.clone()
    }
}

/// Compare the full 15-feature model against the 13 custom features alone
/// and the 2 judge scores alone. Metric: F1.
pub fn group_ablation(
    dataset: &Dataset,
    store: &FeatureStore,
    task: Task,
    spec: &ClassifierSpec,
    config: &CvConfig,
) -> Result<Vec<AblationResult>, AblationError> {
    let full = full_run(dataset, store, task, spec, config)?;
    let all_names = full.feature_names.clone();

    let groups: Vec<(&str, Vec<String>)> = vec![
        (
            "custom_only",
            all_names
                .iter()
                .filter(|n| !crate::features::JUDGE_FEATURE_NAMES.contains(&n.as_str()))
                .cloned()
                .collect(),
        ),
        (
            "judge_only",
            all_names
                .iter()
                .filter(|n| crate::features::JUDGE_FEATURE_NAMES.contains(&n.as_str()))
                .cloned()
                .collect(),
        ),
    ];

    let mut results = Vec::new();
    for (group, columns) in groups {
        if columns.is_empty() {
            return Err(AblationError::EmptyFeatureGroup(group.to_string()));
        }
        let report = run_cv(
            dataset,
            Some(store),
            task,
            Pipeline::FeaturesMl,
            Some(spec),
            &with_columns(config, columns),
        )?;
        results.push(AblationResult {
            removed_or_isolated: group.to_string(),
            metric_name: "f1".to_string(),
            metric_full: full.mean.f1,
            metric_ablated: report.mean.f1,
            delta: full.mean.f1 - report.mean.f1,
            task,
            pipeline: Pipeline::FeaturesMl,
        });
    }
    Ok(results)
}

/// Evaluate each feature in isolation with a one-column model. Results are
/// sorted by isolated F1, best first.
pub fn single_feature(
    dataset: &Dataset,
    store: &FeatureStore,
    task: Task,
    spec: &ClassifierSpec,
    config: &CvConfig,
) -> Result<Vec<AblationResult>, AblationError> {
    let full = full_run(dataset, store, task, spec, config)?;
    let mut results = Vec::new();
    for name in &full.feature_names {
        let report = run_cv(
            dataset,
            Some(store),
            task,
            Pipeline::FeaturesMl,
            Some(spec),
            &with_columns(config, vec![name.clone()]),
        )?;
        results.push(AblationResult {
            removed_or_isolated: name.clone(),
            metric_name: "f1".to_string(),
            metric_full: full.mean.f1,
            metric_ablated: report.mean.f1,
            delta: full.mean.f1 - report.mean.f1,
            task,
            pipeline: Pipeline::FeaturesMl,
        });
    }
    results.sort_by(|a, b| {
        b.metric_ablated
            .partial_cmp(&a.metric_ablated)
            .unwrap()
            .then_with(|| a.removed_or_isolated.cmp(&b.removed_or_isolated))
    });
    Ok(results)
}

/// Remove each feature in turn and measure the ROC-AUC drop relative to the
/// full model. Results are ranked by delta, biggest drop first.
pub fn leave_one_out(
    dataset: &Dataset,
    store: &FeatureStore,
    task: Task,
    spec: &ClassifierSpec,
    config: &CvConfig,
) -> Result<Vec<AblationResult>, AblationError> {
    let full = full_run(dataset, store, task, spec, config)?;
    let full_auc = full.mean.roc_auc.unwrap_or(0.0);
    let mut results = Vec::new();
    for name in &full.feature_names {
        let columns: Vec<String> = full
            .feature_names
            .iter()
            .filter(|n| *n != name)
            .cloned()
            .collect();
        let report = run_cv(
            dataset,
            Some(store),
            task,
            Pipeline::FeaturesMl,
            Some(spec),
            &with_columns(config, columns),
        )?;
        let ablated = report.mean.roc_auc.unwrap_or(0.0);
        results.push(AblationResult {
            removed_or_isolated: name.clone(),
            metric_name: "roc_auc".to_string(),
            metric_full: full_auc,
            metric_ablated: ablated,
            delta: full_auc - ablated,
            task,
            pipeline: Pipeline::FeaturesMl,
        });
    }
    results.sort_by(|a, b| {
        b.delta
            .partial_cmp(&a.delta)
            .unwrap()
            .then_with(|| a.removed_or_isolated.cmp(&b.removed_or_isolated))
    });
    Ok(results)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64, AblationError> {
    if x.len() != y.len() {
        return Err(AblationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(AblationError::TooFewPoints(x.len()));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mean_x) * (b - mean_y);
        var_x += (a - mean_x) * (a - mean_x);
        var_y += (b - mean_y) * (b - mean_y);
    }
    if var_x == 0.0 {
        return Err(AblationError::ZeroVariance(1));
    }
    if var_y == 0.0 {
        return Err(AblationError::ZeroVariance(2));
    }
    Ok(cov / (var_x.sqrt() * var_y.sqrt()))
}

/// Correlations between each judge score and each custom feature over the
/// full labeled dataset, computed on raw 1-10 values.
pub fn judge_feature_correlations(
    dataset: &Dataset,
    store: &FeatureStore,
    task: Task,
) -> Result<Vec<(String, String, f64)>, AblationError> {
    let (_, matrix, _) =
        crate::eval::pipeline_matrix(dataset, Some(store), task, Pipeline::FeaturesMl)?;
    let column = |name: &str| -> Vec<f64> {
        let j = matrix.names.iter().position(|n| n == name).expect("known");
        matrix.rows.iter().map(|r| r[j]).collect()
    };
    let mut out = Vec::new();
    for judge_name in crate::features::JUDGE_FEATURE_NAMES {
        let judge_col = column(judge_name);
        for feature_name in crate::features::DIMENSION_FEATURE_NAMES {
            let feature_col = column(feature_name);
            // Skip degenerate columns rather than abort the whole table.
            match pearson_correlation(&judge_col, &feature_col) {
                Ok(r) => out.push((judge_name.to_string(), feature_name.to_string(), r)),
                Err(AblationError::ZeroVariance(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_linear_correlation() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_correlation(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_correlation(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ten_point_case_matches_direct_formula() {
        let x = vec![2.0, 4.0, 5.0, 5.5, 6.0, 6.5, 7.0, 8.0, 9.0, 10.0];
        let y = vec![1.0, 3.0, 2.0, 5.0, 4.0, 7.0, 8.0, 6.0, 9.0, 10.0];
        let n = 10.0;
        let sum_x: f64 = x.iter().sum();
        let sum_y: f64 = y.iter().sum();
        let sum_xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sum_x2: f64 = x.iter().map(|a| a * a).sum();
        let sum_y2: f64 = y.iter().map(|b| b * b).sum();
        let oracle = (n * sum_xy - sum_x * sum_y)
            / ((n * sum_x2 - sum_x * sum_x).sqrt() * (n * sum_y2 - sum_y * sum_y).sqrt());
        assert!((pearson_correlation(&x, &y).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_and_short_inputs_rejected() {
        assert!(matches!(
            pearson_correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(AblationError::ZeroVariance(1))
        ));
        assert!(matches!(
            pearson_correlation(&[1.0, 2.0], &[1.0, 2.0]),
            Err(AblationError::TooFewPoints(2))
        ));
    }

    #[test]
    fn scale_invariance_and_sign_flip() {
        let x = vec![1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let y = vec![2.0, 3.0, 1.5, 9.0, 4.0, 8.0];
        let base = pearson_correlation(&x, &y).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| 3.0 * v + 11.0).collect();
        assert!((pearson_correlation(&scaled, &y).unwrap() - base).abs() < 1e-12);
        let flipped: Vec<f64> = x.iter().map(|v| -2.0 * v).collect();
        assert!((pearson_correlation(&flipped, &y).unwrap() + base).abs() < 1e-12);
    }
}
