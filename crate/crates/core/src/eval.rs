//! Metrics and the stratified cross-validated experiment runner.
//!
//! Per fold: the training split is balanced by undersampling, judge
//! pipelines select their decision threshold on the balanced training data
//! only, ML pipelines grid-search and fit on it, and the untouched test fold
//! is scored. Nothing about a fold's test labels can influence its selected
//! threshold or hyperparameters.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{balance_training_split, stratified_folds, Dataset, DatasetError, Task};
use crate::ensemble::{aggregate_multi, DEFAULT_BINARIZE_THRESHOLD};
use crate::features::{DIMENSION_FEATURE_NAMES, JUDGE_FEATURE_NAMES};
use crate::judge::{binarize, select_threshold, JudgeError, ThresholdChoice};
use crate::ml::{
    fit_point, grid_search, predict_proba, ClassifierSpec, Family, FeatureMatrix, GridPoint,
    MlError,
};
use crate::rng::mix_seed;
use crate::store::FeatureStore;
use crate::textstats::{text_stats_for, TEXT_STAT_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(preds: &[u8], labels: &[u8]) -> Self {
        let mut counts = ConfusionCounts {
            tp: 0,
            fp: 0,
            tn: 0,
            fn_: 0,
        };
        for (&p, &y) in preds.iter().zip(labels) {
            match (p, y) {
                (1, 1) => counts.tp += 1,
                (1, 0) => counts.fp += 1,
                (0, 0) => counts.tn += 1,
                (0, 1) => counts.fn_ += 1,
                _ => {}
            }
        }
        counts
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Threshold metrics plus ranking AUCs when scores are available.
/// Zero-denominator precision/recall/f1 are reported as 0 and flagged.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
    #[serde(default)]
    pub zero_division_flagged: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("need both classes, got a single one")]
    DegenerateLabels,
    #[error("classifier spec required for pipeline {0}")]
    SpecRequired(Pipeline),
    #[error("{count} samples lack cached features for pipeline {pipeline}: {}", preview_ids(.ids))]
    MissingFeatures {
        pipeline: Pipeline,
        count: usize,
        ids: Vec<String>,
    },
    #[error("task {task} needs at least {need} positives and negatives for k={k}")]
    TooFewForCv { task: Task, k: usize, need: usize },
    #[error("fold {fold} lost both classes after removing incomplete rows")]
    DegenerateFold { fold: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Ml(#[from] MlError),
}

fn require_store<'a>(
    store: Option<&'a FeatureStore>,
    pipeline: Pipeline,
    ids: &[String],
) -> Result<&'a FeatureStore, EvalError> {
    store.ok_or_else(|| EvalError::MissingFeatures {
        pipeline,
        count: ids.len(),
        ids: ids.to_vec(),
    })
}

fn preview_ids(ids: &[String]) -> String {
    const SHOW: usize = 5;
    if ids.len() <= SHOW {
        ids.join(", ")
    } else {
        format!(
            "{}, ... ({} more)",
            ids[..SHOW].join(", "),
            ids.len() - SHOW
        )
    }
}

/// accuracy, precision, recall, f1 from a confusion table. AUCs stay unset.
pub fn metrics_from_confusion(counts: &ConfusionCounts) -> Result<MetricReport, EvalError> {
    let total = counts.total();
    if total == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    let mut flagged = false;
    let mut ratio = |num: usize, den: usize| -> f64 {
        if den == 0 {
            flagged = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = (counts.tp + counts.tn) as f64 / total as f64;
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let f1 = if precision + recall == 0.0 {
        flagged = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MetricReport {
        accuracy,
        precision,
        recall,
        f1,
        roc_auc: None,
        pr_auc: None,
        zero_division_flagged: flagged,
    })
}

fn check_ranking_input(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    Ok((pos, neg))
}

/// Probability that a random positive outranks a random negative, ties at
/// half credit (rank-sum formulation).
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    let (pos, neg) = check_ranking_input(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Average ranks over tie groups (1-based ranks).
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let pos_f = pos as f64;
    let u = rank_sum_pos - pos_f * (pos_f + 1.0) / 2.0;
    Ok(u / (pos_f * neg as f64))
}

/// Area under the precision-recall curve: step-wise average precision over
/// descending distinct score thresholds.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    let (pos, _) = check_ranking_input(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut area = 0.0;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(area)
}

/// Which feature set feeds the classifier (or none, for the raw judge).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    JudgeOnly,
    FeaturesMl,
    JudgeOnlyScoresMl,
    CustomFeaturesOnlyMl,
    TextstatsMl,
    EnsembleVariants,
    BinaryLogitMl,
}

impl Pipeline {
    pub const ALL: [Pipeline; 7] = [
        Pipeline::JudgeOnly,
        Pipeline::FeaturesMl,
        Pipeline::JudgeOnlyScoresMl,
        Pipeline::CustomFeaturesOnlyMl,
        Pipeline::TextstatsMl,
        Pipeline::EnsembleVariants,
        Pipeline::BinaryLogitMl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::JudgeOnly => "judge_only",
            Pipeline::FeaturesMl => "features_ml",
            Pipeline::JudgeOnlyScoresMl => "judge_only_scores_ml",
            Pipeline::CustomFeaturesOnlyMl => "custom_features_only_ml",
            Pipeline::TextstatsMl => "textstats_ml",
            Pipeline::EnsembleVariants => "ensemble_variants",
            Pipeline::BinaryLogitMl => "binary_logit_ml",
        }
    }

    pub fn parse(name: &str) -> Option<Pipeline> {
        Pipeline::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn needs_classifier(&self) -> bool {
        !matches!(self, Pipeline::JudgeOnly)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Assemble the name-aligned matrix for one pipeline over the labeled
/// samples of a task. Rows are in dataset order; cells are NaN where an
/// analyzer failed; samples with no cache record at all are an error.
pub fn pipeline_matrix(
    dataset: &Dataset,
    store: Option<&FeatureStore>,
    task: Task,
    pipeline: Pipeline,
) -> Result<(Vec<String>, FeatureMatrix, Vec<u8>), EvalError> {
    let labeled = dataset.labeled_for(task);
    if labeled.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let ids: Vec<String> = labeled.iter().map(|s| s.id.clone()).collect();
    let labels: Vec<u8> = labeled
        .iter()
        .map(|s| task.label_of(s).expect("labeled"))
        .collect();

    let judge_pair_row = |record: &crate::store::SampleRecord| -> [f64; 2] {
        match &record.judge {
            Some(judge) => [f64::from(judge.hal_score), f64::from(judge.omis_score)],
            None => [f64::NAN, f64::NAN],
        }
    };

    let (names, rows) = match pipeline {
        Pipeline::TextstatsMl => {
            let names: Vec<String> = TEXT_STAT_NAMES.iter().map(|s| s.to_string()).collect();
            let rows: Vec<Vec<f64>> = labeled
                .iter()
                .map(|s| text_stats_for(s).to_vector())
                .collect();
            (names, rows)
        }
        Pipeline::JudgeOnly | Pipeline::JudgeOnlyScoresMl => {
            let store = require_store(store, pipeline, &ids)?;
            let mut rows = Vec::with_capacity(ids.len());
            let mut missing = Vec::new();
            for (sample, id) in labeled.iter().zip(&ids) {
                let _ = sample;
                match store.get(id) {
                    Some(record) => rows.push(judge_pair_row(record).to_vec()),
                    None => missing.push(id.clone()),
                }
            }
            if !missing.is_empty() {
                return Err(EvalError::MissingFeatures {
                    pipeline,
                    count: missing.len(),
                    ids: missing,
                });
            }
            let names = JUDGE_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
            (names, rows)
        }
        Pipeline::FeaturesMl | Pipeline::CustomFeaturesOnlyMl => {
            let store = require_store(store, pipeline, &ids)?;
            let mut names: Vec<String> = Vec::new();
            if pipeline == Pipeline::FeaturesMl {
                names.extend(JUDGE_FEATURE_NAMES.iter().map(|s| s.to_string()));
            }
            names.extend(DIMENSION_FEATURE_NAMES.iter().map(|s| s.to_string()));

            let mut rows = Vec::with_capacity(ids.len());
            let mut missing = Vec::new();
            for id in &ids {
                let Some(record) = store.get(id) else {
                    missing.push(id.clone());
                    continue;
                };
                let mut row = Vec::with_capacity(names.len());
                if pipeline == Pipeline::FeaturesMl {
                    row.extend(judge_pair_row(record));
                }
                for &name in DIMENSION_FEATURE_NAMES.iter() {
                    row.push(record.dimensions.get(name).copied().unwrap_or(f64::NAN));
                }
                rows.push(row);
            }
            if !missing.is_empty() {
                return Err(EvalError::MissingFeatures {
                    pipeline,
                    count: missing.len(),
                    ids: missing,
                });
            }
            (names, rows)
        }
        Pipeline::EnsembleVariants => {
            let store = require_store(store, pipeline, &ids)?;
            // Union of backend ids over all records fixes the column set.
            let mut backend_ids: Vec<String> = Vec::new();
            for id in &ids {
                if let Some(record) = store.get(id) {
                    if let Some(multi) = &record.multi_llm {
                        for backend_id in multi.scores.keys() {
                            if !backend_ids.contains(backend_id) {
                                backend_ids.push(backend_id.clone());
                            }
                        }
                    }
                }
            }
            backend_ids.sort();
            if backend_ids.is_empty() {
                return Err(EvalError::MissingFeatures {
                    pipeline,
                    count: ids.len(),
                    ids: ids.clone(),
                });
            }
            let mut names: Vec<String> = Vec::new();
            for dimension in crate::ensemble::MULTI_DIMENSIONS {
                for stat in crate::ensemble::AGGREGATE_STATS {
                    names.push(format!("{dimension}_{stat}"));
                }
            }
            for backend_id in &backend_ids {
                for dimension in crate::ensemble::MULTI_DIMENSIONS {
                    names.push(format!("{backend_id}_{dimension}_score"));
                    names.push(format!("{backend_id}_{dimension}_flag"));
                }
            }

            let mut rows = Vec::with_capacity(ids.len());
            let mut missing = Vec::new();
            for id in &ids {
                let multi = store.get(id).and_then(|r| r.multi_llm.as_ref());
                let Some(multi) = multi else {
                    missing.push(id.clone());
                    continue;
                };
                let mut values: BTreeMap<String, f64> = BTreeMap::new();
                if let Ok(agg) = aggregate_multi(multi, DEFAULT_BINARIZE_THRESHOLD, None) {
                    for (name, value) in agg.aggregated.into_iter().chain(agg.individual) {
                        values.insert(name, value);
                    }
                }
                rows.push(
                    names
                        .iter()
                        .map(|name| values.get(name).copied().unwrap_or(f64::NAN))
                        .collect(),
                );
            }
            if !missing.is_empty() {
                return Err(EvalError::MissingFeatures {
                    pipeline,
                    count: missing.len(),
                    ids: missing,
                });
            }
            (names, rows)
        }
        Pipeline::BinaryLogitMl => {
            let store = require_store(store, pipeline, &ids)?;
            let names = vec![
                "hallucination_probability".to_string(),
                "response_char_len".to_string(),
                "response_word_count".to_string(),
            ];
            let mut rows = Vec::with_capacity(ids.len());
            let mut missing = Vec::new();
            for id in &ids {
                match store.get(id).and_then(|r| r.binary_logit.as_ref()) {
                    Some(bl) => rows.push(vec![
                        bl.probability,
                        bl.response_char_len,
                        bl.response_word_count,
                    ]),
                    None => missing.push(id.clone()),
                }
            }
            if !missing.is_empty() {
                return Err(EvalError::MissingFeatures {
                    pipeline,
                    count: missing.len(),
                    ids: missing,
                });
            }
            (names, rows)
        }
    };

    Ok((ids, FeatureMatrix::new(names, rows), labels))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold_index: usize,
    pub metrics: MetricReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper_point: Option<GridPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_f1: Option<f64>,
    pub n_train_balanced: usize,
    pub n_test: usize,
}

/// Per-fold and aggregated metrics for one (task, pipeline, family) run.
/// The ± values are across-fold population standard deviations
/// (denominator k).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CVReport {
    pub task: Task,
    pub pipeline: Pipeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    pub k: usize,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub folds: Vec<FoldOutcome>,
    pub mean: MetricReport,
    pub std: MetricReport,
}

impl CVReport {
    pub fn label(&self) -> String {
        match self.family {
            Some(family) => format!("{}/{}/{}", self.task, self.pipeline, family),
            None => format!("{}/{}", self.task, self.pipeline),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub inner_k: usize,
    /// Optional column filter (ablations); names must exist in the pipeline
    /// matrix.
    pub columns: Option<Vec<String>>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 42,
            inner_k: 3,
            columns: None,
        }
    }
}

fn select_columns(matrix: &FeatureMatrix, columns: &[String]) -> Result<FeatureMatrix, EvalError> {
    let mut indices = Vec::with_capacity(columns.len());
    for name in columns {
        let idx = matrix.names.iter().position(|n| n == name).ok_or_else(|| {
            EvalError::MissingFeatures {
                pipeline: Pipeline::FeaturesMl,
                count: 1,
                ids: vec![format!("column:{name}")],
            }
        })?;
        indices.push(idx);
    }
    Ok(FeatureMatrix::new(
        columns.to_vec(),
        matrix
            .rows
            .iter()
            .map(|row| indices.iter().map(|&j| row[j]).collect())
            .collect(),
    ))
}

fn aggregate(folds: &[FoldOutcome]) -> (MetricReport, MetricReport) {
    let k = folds.len() as f64;
    let pick = |f: &dyn Fn(&MetricReport) -> f64| -> (f64, f64) {
        let values: Vec<f64> = folds.iter().map(|fold| f(&fold.metrics)).collect();
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
        (mean, var.sqrt())
    };
    let auc = |f: &dyn Fn(&MetricReport) -> Option<f64>| -> (Option<f64>, Option<f64>) {
        let values: Option<Vec<f64>> = folds.iter().map(|fold| f(&fold.metrics)).collect();
        match values {
            Some(values) => {
                let mean = values.iter().sum::<f64>() / k;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
                (Some(mean), Some(var.sqrt()))
            }
            None => (None, None),
        }
    };
    let (acc_m, acc_s) = pick(&|m| m.accuracy);
    let (pre_m, pre_s) = pick(&|m| m.precision);
    let (rec_m, rec_s) = pick(&|m| m.recall);
    let (f1_m, f1_s) = pick(&|m| m.f1);
    let (roc_m, roc_s) = auc(&|m| m.roc_auc);
    let (pr_m, pr_s) = auc(&|m| m.pr_auc);
    let flagged = folds.iter().any(|f| f.metrics.zero_division_flagged);
    (
        MetricReport {
            accuracy: acc_m,
            precision: pre_m,
            recall: rec_m,
            f1: f1_m,
            roc_auc: roc_m,
            pr_auc: pr_m,
            zero_division_flagged: flagged,
        },
        MetricReport {
            accuracy: acc_s,
            precision: pre_s,
            recall: rec_s,
            f1: f1_s,
            roc_auc: roc_s,
            pr_auc: pr_s,
            zero_division_flagged: flagged,
        },
    )
}

/// Run one stratified balanced cross-validation experiment.
pub fn run_cv(
    dataset: &Dataset,
    store: Option<&FeatureStore>,
    task: Task,
    pipeline: Pipeline,
    spec: Option<&ClassifierSpec>,
    config: &CvConfig,
) -> Result<CVReport, EvalError> {
    let (ids, matrix, labels) = pipeline_matrix(dataset, store, task, pipeline)?;
    let matrix = match &config.columns {
        Some(columns) => select_columns(&matrix, columns)?,
        None => matrix,
    };
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos < config.k || n_neg < config.k {
        return Err(EvalError::TooFewForCv {
            task,
            k: config.k,
            need: config.k,
        });
    }
    if pipeline.needs_classifier() && spec.is_none() {
        return Err(EvalError::SpecRequired(pipeline));
    }

    let row_of: BTreeMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let label_of = |id: &str| labels[row_of[id]];

    let folds = stratified_folds(dataset, config.k, task, config.seed)?;
    let mut outcomes = Vec::with_capacity(folds.len());

    for fold in &folds {
        let balance_seed = mix_seed(&[config.seed, fold.fold_index as u64, 0xBA1A]);
        let balanced = balance_training_split(dataset, &fold.train_ids, task, balance_seed)?;
        let test_labels: Vec<u8> = fold.test_ids.iter().map(|id| label_of(id)).collect();

        let outcome = match pipeline {
            Pipeline::JudgeOnly => {
                // Judge scores live in column 0/1 of the judge matrix
                // depending on the task.
                let col = match task {
                    Task::Hallucination => 0,
                    Task::Omission => 1,
                };
                let score_of = |id: &str| matrix.rows[row_of[id]][col];
                let train_scores: Vec<i32> =
                    balanced.iter().map(|id| score_of(id) as i32).collect();
                if train_scores.contains(&0) || balanced.iter().any(|id| score_of(id).is_nan()) {
                    return Err(EvalError::MissingFeatures {
                        pipeline,
                        count: 1,
                        ids: vec!["(judge scores unavailable)".to_string()],
                    });
                }
                let train_labels: Vec<u8> = balanced.iter().map(|id| label_of(id)).collect();
                let choice = select_threshold(&train_scores, &train_labels, task)?;

                let test_scores: Vec<f64> = fold.test_ids.iter().map(|id| score_of(id)).collect();
                let preds: Vec<u8> = test_scores
                    .iter()
                    .map(|&s| binarize(s as i32, choice.threshold))
                    .collect();
                let counts = ConfusionCounts::from_predictions(&preds, &test_labels);
                let mut metrics = metrics_from_confusion(&counts)?;
                metrics.roc_auc = Some(roc_auc(&test_scores, &test_labels)?);
                metrics.pr_auc = Some(pr_auc(&test_scores, &test_labels)?);
                FoldOutcome {
                    fold_index: fold.fold_index,
                    metrics,
                    threshold: Some(choice),
                    hyper_point: None,
                    inner_f1: None,
                    n_train_balanced: balanced.len(),
                    n_test: fold.test_ids.len(),
                }
            }
            _ => {
                let spec = spec.expect("checked above");
                // Incomplete rows (NaN from failed analyzers) are excluded
                // from training; test rows keep them and rely on imputation.
                let train_idx: Vec<usize> = balanced
                    .iter()
                    .map(|id| row_of[id.as_str()])
                    .filter(|&i| matrix.rows[i].iter().all(|v| v.is_finite()))
                    .collect();
                let train_x = matrix.select_rows(&train_idx);
                let train_y: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
                if !train_y.contains(&0) || !train_y.contains(&1) {
                    return Err(EvalError::DegenerateFold {
                        fold: fold.fold_index,
                    });
                }

                let grid_seed = mix_seed(&[config.seed, fold.fold_index as u64, 0x6B1D]);
                let search = grid_search(spec, &train_x, &train_y, config.inner_k, grid_seed)?;
                let model = fit_point(spec, &search.best, &train_x, &train_y)?;

                let test_idx: Vec<usize> =
                    fold.test_ids.iter().map(|id| row_of[id.as_str()]).collect();
                let test_x = matrix.select_rows(&test_idx);
                let probs = predict_proba(&model, &test_x)?;
                let preds: Vec<u8> = probs.iter().map(|&p| u8::from(p >= 0.5)).collect();
                let counts = ConfusionCounts::from_predictions(&preds, &test_labels);
                let mut metrics = metrics_from_confusion(&counts)?;
                metrics.roc_auc = Some(roc_auc(&probs, &test_labels)?);
                metrics.pr_auc = Some(pr_auc(&probs, &test_labels)?);
                FoldOutcome {
                    fold_index: fold.fold_index,
                    metrics,
                    threshold: None,
                    hyper_point: Some(search.best),
                    inner_f1: Some(search.inner_f1),
                    n_train_balanced: balanced.len(),
                    n_test: fold.test_ids.len(),
                }
            }
        };
        outcomes.push(outcome);
    }

    let (mean, std) = aggregate(&outcomes);
    Ok(CVReport {
        task,
        pipeline,
        family: spec.map(|s| s.family),
        k: config.k,
        seed: config.seed,
        feature_names: matrix.names,
        folds: outcomes,
        mean,
        std,
    })
}

/// Winner selection: highest mean F1, ties to higher mean ROC-AUC, then to
/// earlier position.
pub fn select_best(reports: &[CVReport]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, report) in reports.iter().enumerate() {
        let better = match best {
            None => true,
            Some(j) => {
                let (a, b) = (&reports[j].mean, &report.mean);
                b.f1 > a.f1 || (b.f1 == a.f1 && b.roc_auc.unwrap_or(0.0) > a.roc_auc.unwrap_or(0.0))
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::Backend;
    use crate::dataset::{AnnotatedSample, SampleSource};
    use crate::prompts::TemplateRegistry;
    use crate::rng::SplitMix64;
    use crate::store::{extract_dataset, ExtractionPlan};

    #[test]
    fn confusion_metrics_match_hand_computation() {
        let counts = ConfusionCounts {
            tp: 2,
            fp: 1,
            tn: 5,
            fn_: 2,
        };
        let m = metrics_from_confusion(&counts).unwrap();
        assert!((m.precision - 0.6667).abs() < 5e-5);
        assert!((m.recall - 0.5).abs() < 1e-12);
        assert!((m.f1 - 0.5714).abs() < 5e-5);
        assert!((m.accuracy - 0.7).abs() < 1e-12);
        assert!(!m.zero_division_flagged);
    }

    #[test]
    fn perfect_predictor_scores_one() {
        let counts = ConfusionCounts {
            tp: 5,
            fp: 0,
            tn: 5,
            fn_: 0,
        };
        let m = metrics_from_confusion(&counts).unwrap();
        assert_eq!(
            (m.accuracy, m.precision, m.recall, m.f1),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn zero_denominator_precision_is_flagged_zero() {
        let counts = ConfusionCounts {
            tp: 0,
            fp: 0,
            tn: 8,
            fn_: 2,
        };
        let m = metrics_from_confusion(&counts).unwrap();
        assert_eq!(m.precision, 0.0);
        assert!(m.zero_division_flagged);
    }

    #[test]
    fn roc_auc_trivials() {
        let labels = vec![1, 1, 0, 0];
        assert_eq!(roc_auc(&[3.0; 4], &labels).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap(), 1.0);
        assert!(matches!(
            roc_auc(&[1.0, 2.0], &[1, 1]),
            Err(EvalError::DegenerateLabels)
        ));
    }

    #[test]
    fn roc_auc_matches_pairwise_brute_force() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..20 {
            let n = 50;
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.next_bounded(20) as f64) / 2.0)
                .collect();
            let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.next_f64() < 0.3)).collect();
            if !labels.contains(&1) || !labels.contains(&0) {
                continue;
            }
            let fast = roc_auc(&scores, &labels).unwrap();
            let mut wins = 0.0;
            let mut pairs = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if labels[i] == 1 && labels[j] == 0 {
                        pairs += 1.0;
                        if scores[i] > scores[j] {
                            wins += 1.0;
                        } else if scores[i] == scores[j] {
                            wins += 0.5;
                        }
                    }
                }
            }
            assert!((fast - wins / pairs).abs() < 1e-9);
        }
    }

    #[test]
    fn pr_auc_trivials() {
        let labels = vec![1, 1, 0, 0, 0];
        assert_eq!(pr_auc(&[0.9, 0.8, 0.2, 0.1, 0.05], &labels).unwrap(), 1.0);
        // All-equal scores: single threshold, precision = prevalence.
        let flat = pr_auc(&[0.5; 5], &labels).unwrap();
        assert!((flat - 0.4).abs() < 1e-12);
    }

    #[test]
    fn roc_invariant_under_monotone_transform() {
        let mut rng = SplitMix64::new(3);
        let scores: Vec<f64> = (0..40).map(|_| rng.next_f64()).collect();
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 0)).collect();
        let base = roc_auc(&scores, &labels).unwrap();
        let transformed: Vec<f64> = scores.iter().map(|&s| (s * 3.0).exp() + 7.0).collect();
        assert!((base - roc_auc(&transformed, &labels).unwrap()).abs() < 1e-12);
    }

    /// Synthetic dataset whose mock directives plant judge scores equal to
    /// labels scaled onto the 1-10 range, so judge_only separates perfectly.
    fn separable_judge_dataset(n: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| {
                let label = u8::from(i % 4 == 0);
                let score = if label == 1 { 10 } else { 1 };
                AnnotatedSample {
                    id: format!("s{i:03}"),
                    prompt: format!("prompt {i}"),
                    response: format!(
                        "response {i} [[mock: hal_score={score}, omis_score={score}, entity_count=1, claim_count=1]]"
                    ),
                    label_hallucination: Some(label),
                    label_omission: None,
                    source: SampleSource::Synthetic,
                }
            })
            .collect();
        Dataset::from_samples(samples).unwrap()
    }

    fn extracted_store(dataset: &Dataset) -> FeatureStore {
        let backend = Backend::mock("m", 42);
        let registry = TemplateRegistry::new().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let (store, summary) = extract_dataset(
            dataset,
            &backend,
            &[],
            &registry,
            &ExtractionPlan::standard(),
            &path,
            2,
        )
        .unwrap();
        assert!(summary.failed_ids.is_empty());
        store
    }

    #[test]
    fn judge_only_on_separable_scores_is_perfect_with_threshold_two() {
        let dataset = separable_judge_dataset(40);
        let store = extracted_store(&dataset);
        let report = run_cv(
            &dataset,
            Some(&store),
            Task::Hallucination,
            Pipeline::JudgeOnly,
            None,
            &CvConfig::default(),
        )
        .unwrap();
        assert_eq!(report.mean.f1, 1.0);
        for fold in &report.folds {
            assert_eq!(fold.threshold.unwrap().threshold, 2);
        }
    }

    #[test]
    fn cv_report_mean_is_exact_arithmetic_mean() {
        let dataset = separable_judge_dataset(40);
        let store = extracted_store(&dataset);
        let report = run_cv(
            &dataset,
            Some(&store),
            Task::Hallucination,
            Pipeline::JudgeOnly,
            None,
            &CvConfig::default(),
        )
        .unwrap();
        let mean_acc: f64 = report.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>()
            / report.folds.len() as f64;
        assert_eq!(report.mean.accuracy, mean_acc);
    }

    #[test]
    fn judge_pipeline_is_deterministic() {
        let dataset = separable_judge_dataset(32);
        let store = extracted_store(&dataset);
        let run = || {
            run_cv(
                &dataset,
                Some(&store),
                Task::Hallucination,
                Pipeline::JudgeOnly,
                None,
                &CvConfig::default(),
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn no_leakage_test_labels_do_not_change_selection() {
        let dataset = separable_judge_dataset(40);
        let store = extracted_store(&dataset);
        let spec = ClassifierSpec::default_for(Family::Logistic, 42);
        let config = CvConfig::default();
        let base = run_cv(
            &dataset,
            Some(&store),
            Task::Hallucination,
            Pipeline::FeaturesMl,
            Some(&spec),
            &config,
        )
        .unwrap();

        // Flip every test label of fold 0 in a copied dataset.
        let folds = stratified_folds(&dataset, config.k, Task::Hallucination, config.seed).unwrap();
        let flip: std::collections::BTreeSet<&String> = folds[0].test_ids.iter().collect();
        let mutated: Vec<AnnotatedSample> = dataset
            .samples()
            .iter()
            .cloned()
            .map(|mut s| {
                if flip.contains(&s.id) {
                    s.label_hallucination = s.label_hallucination.map(|y| 1 - y);
                }
                s
            })
            .collect();
        let mutated = Dataset::from_samples(mutated).unwrap();
        // Flipping labels changes stratification, so the metamorphic check
        // replays fold 0's own selection steps on both datasets: identical
        // training ids must yield identical balanced splits, thresholds, and
        // grid-search winners, no matter what the test labels say.
        let balanced_before =
            balance_training_split(&dataset, &folds[0].train_ids, Task::Hallucination, 1).unwrap();
        let balanced_after =
            balance_training_split(&mutated, &folds[0].train_ids, Task::Hallucination, 1).unwrap();
        assert_eq!(balanced_before, balanced_after);

        let (ids, matrix, labels) = pipeline_matrix(
            &dataset,
            Some(&store),
            Task::Hallucination,
            Pipeline::FeaturesMl,
        )
        .unwrap();
        let row_of: BTreeMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let pick = |ds: &Dataset, ids: &[String]| -> (Vec<i32>, Vec<u8>, Vec<usize>) {
            let scores = ids
                .iter()
                .map(|id| matrix.rows[row_of[id.as_str()]][0] as i32)
                .collect();
            let y = ids
                .iter()
                .map(|id| ds.get(id).unwrap().label_hallucination.unwrap())
                .collect();
            let idx = ids.iter().map(|id| row_of[id.as_str()]).collect();
            (scores, y, idx)
        };
        let (scores_a, y_a, idx_a) = pick(&dataset, &balanced_before);
        let (scores_b, y_b, idx_b) = pick(&mutated, &balanced_after);
        assert_eq!(y_a, y_b, "training labels changed by a test-label flip");
        assert_eq!(
            select_threshold(&scores_a, &y_a, Task::Hallucination).unwrap(),
            select_threshold(&scores_b, &y_b, Task::Hallucination).unwrap()
        );
        let search = |idx: &[usize], y: &[u8]| {
            crate::ml::grid_search(&spec, &matrix.select_rows(idx), y, 3, 99).unwrap()
        };
        assert_eq!(search(&idx_a, &y_a).best, search(&idx_b, &y_b).best);
        assert_eq!(labels.len(), ids.len());
        let _ = base;
    }

    #[test]
    fn select_best_prefers_f1_then_roc() {
        let template = run_stub(0.7, Some(0.8));
        let mut reports = vec![template.clone(), template.clone(), template];
        reports[1].mean.f1 = 0.6;
        reports[2].mean.f1 = 0.7;
        reports[2].mean.roc_auc = Some(0.75);
        assert_eq!(select_best(&reports), Some(0));

        let mut tie = vec![run_stub(0.5, Some(0.7)), run_stub(0.5, Some(0.9))];
        assert_eq!(select_best(&tie), Some(1));
        tie[1].mean.roc_auc = Some(0.7);
        assert_eq!(select_best(&tie), Some(0));
    }

    fn run_stub(f1: f64, roc: Option<f64>) -> CVReport {
        let metrics = MetricReport {
            accuracy: 0.0,
            precision: 0.0,
            recall: 0.0,
            f1,
            roc_auc: roc,
            pr_auc: None,
            zero_division_flagged: false,
        };
        CVReport {
            task: Task::Hallucination,
            pipeline: Pipeline::FeaturesMl,
            family: Some(Family::Logistic),
            k: 5,
            seed: 42,
            feature_names: Vec::new(),
            folds: Vec::new(),
            mean: metrics,
            std: metrics,
        }
    }

    #[test]
    fn single_candidate_wins() {
        let reports = vec![run_stub(0.4, None)];
        assert_eq!(select_best(&reports), Some(0));
        assert_eq!(select_best(&[]), None);
    }
}
