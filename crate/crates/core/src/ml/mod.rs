//! In-repo supervised classifiers: logistic regression, random forest, and
//! gradient-boosted trees, with deterministic seeded training, nested
//! stratified grid search, and exact round-trip model serialization.

pub mod forest;
pub mod gbdt;
pub mod logistic;
pub mod tree;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ml::forest::{fit_forest, forest_proba, ForestParams};
use crate::ml::gbdt::{fit_gbdt, gbdt_proba, GbdtModel, GbdtParams};
use crate::ml::logistic::{sigmoid, LogisticParams, Standardization};
use crate::ml::tree::Tree;
use crate::rng::mix_seed;
use crate::stratify::stratified_test_folds;

/// Probabilities are kept strictly inside (0, 1).
pub const PROBA_EPS: f64 = 1e-12;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    RandomForest,
    Gbdt,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Logistic, Family::RandomForest, Family::Gbdt];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::RandomForest => "random_forest",
            Family::Gbdt => "gbdt",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        match name {
            "logistic" => Some(Family::Logistic),
            "random_forest" => Some(Family::RandomForest),
            "gbdt" => Some(Family::Gbdt),
            _ => None,
        }
    }

    fn valid_hypers(&self) -> &'static [&'static str] {
        match self {
            Family::Logistic => &["l2_strength", "max_epochs", "learning_rate"],
            Family::RandomForest => &["n_trees", "max_depth", "min_leaf"],
            Family::Gbdt => &["n_rounds", "learning_rate", "max_depth"],
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Candidate hyperparameter lists in declaration order. Values are f64; for
/// tree depth 0 encodes "unlimited".
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassifierSpec {
    pub family: Family,
    pub hyper_grid: Vec<(String, Vec<f64>)>,
    pub seed: u64,
}

impl ClassifierSpec {
    /// Small conventional default grids per family.
    pub fn default_for(family: Family, seed: u64) -> Self {
        let hyper_grid = match family {
            Family::Logistic => vec![
                ("l2_strength".to_string(), vec![0.01, 0.1, 1.0, 10.0]),
                ("max_epochs".to_string(), vec![500.0]),
                ("learning_rate".to_string(), vec![0.1]),
            ],
            Family::RandomForest => vec![
                ("n_trees".to_string(), vec![100.0, 300.0]),
                ("max_depth".to_string(), vec![4.0, 8.0, 0.0]),
                ("min_leaf".to_string(), vec![1.0]),
            ],
            Family::Gbdt => vec![
                ("n_rounds".to_string(), vec![100.0, 300.0]),
                ("learning_rate".to_string(), vec![0.05, 0.1]),
                ("max_depth".to_string(), vec![3.0, 5.0]),
            ],
        };
        Self {
            family,
            hyper_grid,
            seed,
        }
    }

    /// The first value of every candidate list.
    pub fn head_point(&self) -> GridPoint {
        GridPoint(
            self.hyper_grid
                .iter()
                .map(|(name, values)| (name.clone(), values[0]))
                .collect(),
        )
    }

    fn validate(&self) -> Result<(), MlError> {
        if self.hyper_grid.is_empty() || self.hyper_grid.iter().any(|(_, v)| v.is_empty()) {
            return Err(MlError::EmptyGrid);
        }
        let valid = self.family.valid_hypers();
        let mut seen = BTreeSet::new();
        for (name, _) in &self.hyper_grid {
            if !valid.contains(&name.as_str()) {
                return Err(MlError::InvalidHyperparameter {
                    family: self.family,
                    name: name.clone(),
                });
            }
            if !seen.insert(name.clone()) {
                return Err(MlError::InvalidHyperparameter {
                    family: self.family,
                    name: format!("{name} (duplicated)"),
                });
            }
        }
        Ok(())
    }

    /// Cartesian product in declaration order: the first hyperparameter
    /// varies slowest, so ties in grid search resolve to earlier declarations.
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let mut points = vec![Vec::new()];
        for (name, values) in &self.hyper_grid {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for prefix in &points {
                for &v in values {
                    let mut point = prefix.clone();
                    point.push((name.clone(), v));
                    next.push(point);
                }
            }
            points = next;
        }
        points.into_iter().map(GridPoint).collect()
    }
}

/// One resolved hyperparameter assignment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridPoint(pub Vec<(String, f64)>);

impl GridPoint {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    fn get_or(&self, name: &str, default: f64) -> f64 {
        self.get(name).unwrap_or(default)
    }
}

impl std::fmt::Display for GridPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(n, v)| format!("{n}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Name-aligned numeric matrix. Rows may contain NaN for failed extractions;
/// training rejects them, prediction imputes them.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == names.len()));
        Self { names, rows }
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MlError {
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("need at least 4 training rows, got {0}")]
    TooFewSamples(usize),
    #[error("non-finite value in feature {feature} of training row {row}")]
    NonFiniteFeature { row: usize, feature: String },
    #[error("feature names do not match the trained model")]
    FeatureNameMismatch,
    #[error("rows and labels differ in length: {rows} vs {labels}")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("{family} does not accept hyperparameter {name}")]
    InvalidHyperparameter { family: Family, name: String },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("inner fold count must be at least 2, got {0}")]
    BadInnerK(usize),
    #[error("model deserialization failed: {0}")]
    BadModelFile(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Logistic(LogisticParams),
    RandomForest { trees: Vec<Tree> },
    Gbdt(GbdtModel),
}

/// Everything needed to reproduce predictions: fitted parameters, the frozen
/// feature-name list, standardization (logistic only), and the per-feature
/// median table used to impute missing values at inference.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainedModel {
    pub format_version: u32,
    pub family: Family,
    pub feature_names: Vec<String>,
    pub params: ModelParams,
    pub standardization: Option<Standardization>,
    pub imputation_table: Vec<f64>,
    pub hyper_point: GridPoint,
    pub seed: u64,
}

impl TrainedModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MlError> {
        serde_json::from_str(text).map_err(|e| MlError::BadModelFile(e.to_string()))
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn imputation_table(x: &FeatureMatrix) -> Vec<f64> {
    (0..x.names.len())
        .map(|j| {
            let mut column: Vec<f64> = x
                .rows
                .iter()
                .map(|r| r[j])
                .filter(|v| v.is_finite())
                .collect();
            median(&mut column)
        })
        .collect()
}

fn check_training_input(x: &FeatureMatrix, y: &[u8]) -> Result<(), MlError> {
    if x.rows.len() != y.len() {
        return Err(MlError::LengthMismatch {
            rows: x.rows.len(),
            labels: y.len(),
        });
    }
    if x.rows.len() < 4 {
        return Err(MlError::TooFewSamples(x.rows.len()));
    }
    if !y.contains(&0) || !y.contains(&1) {
        return Err(MlError::DegenerateLabels);
    }
    for (i, row) in x.rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(MlError::NonFiniteFeature {
                    row: i,
                    feature: x.names[j].clone(),
                });
            }
        }
    }
    Ok(())
}

/// Fit with an explicit hyperparameter point. All randomness comes from
/// `spec.seed`; the same spec and data reproduce the model bit-for-bit.
pub fn fit_point(
    spec: &ClassifierSpec,
    point: &GridPoint,
    x: &FeatureMatrix,
    y: &[u8],
) -> Result<TrainedModel, MlError> {
    spec.validate()?;
    check_training_input(x, y)?;
    for (name, _) in &point.0 {
        if !spec.family.valid_hypers().contains(&name.as_str()) {
            return Err(MlError::InvalidHyperparameter {
                family: spec.family,
                name: name.clone(),
            });
        }
    }

    let imputation = imputation_table(x);
    let (params, standardization) = match spec.family {
        Family::Logistic => {
            let standardization = Standardization::fit(&x.rows);
            let xs = standardization.apply(&x.rows);
            let (params, _) = logistic::train(
                &xs,
                y,
                point.get_or("l2_strength", 1.0),
                point.get_or("learning_rate", 0.1),
                point.get_or("max_epochs", 500.0) as usize,
            );
            (ModelParams::Logistic(params), Some(standardization))
        }
        Family::RandomForest => {
            let trees = fit_forest(
                &x.rows,
                y,
                &ForestParams {
                    n_trees: point.get_or("n_trees", 100.0).max(1.0) as usize,
                    max_depth: point.get_or("max_depth", 0.0).max(0.0) as usize,
                    min_leaf: point.get_or("min_leaf", 1.0).max(1.0) as usize,
                },
                spec.seed,
            );
            (ModelParams::RandomForest { trees }, None)
        }
        Family::Gbdt => {
            let model = fit_gbdt(
                &x.rows,
                y,
                &GbdtParams {
                    n_rounds: point.get_or("n_rounds", 100.0).max(1.0) as usize,
                    learning_rate: point.get_or("learning_rate", 0.1),
                    max_depth: point.get_or("max_depth", 3.0).max(1.0) as usize,
                },
                spec.seed,
            );
            (ModelParams::Gbdt(model), None)
        }
    };

    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        family: spec.family,
        feature_names: x.names.clone(),
        params,
        standardization,
        imputation_table: imputation,
        hyper_point: point.clone(),
        seed: spec.seed,
    })
}

/// Fit using the head of each candidate list in the classifier spec.
pub fn fit(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[u8]) -> Result<TrainedModel, MlError> {
    let point = spec.head_point();
    fit_point(spec, &point, x, y)
}

/// Positive-class probabilities, strictly inside (0, 1). NaN feature values
/// are imputed from the model's median table before scoring.
pub fn predict_proba(model: &TrainedModel, x: &FeatureMatrix) -> Result<Vec<f64>, MlError> {
    if model.feature_names != x.names {
        return Err(MlError::FeatureNameMismatch);
    }
    let mut out = Vec::with_capacity(x.rows.len());
    for row in &x.rows {
        let imputed: Vec<f64> = row
            .iter()
            .zip(&model.imputation_table)
            .map(|(&v, &m)| if v.is_finite() { v } else { m })
            .collect();
        let p = match &model.params {
            ModelParams::Logistic(params) => {
                let std = model
                    .standardization
                    .as_ref()
                    .expect("logistic stores standardization");
                let xs = std.apply_row(&imputed);
                let z: f64 = xs
                    .iter()
                    .zip(&params.weights)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + params.bias;
                sigmoid(z)
            }
            ModelParams::RandomForest { trees } => forest_proba(trees, &imputed),
            ModelParams::Gbdt(gbdt) => gbdt_proba(gbdt, &imputed),
        };
        out.push(p.clamp(PROBA_EPS, 1.0 - PROBA_EPS));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub best: GridPoint,
    pub inner_f1: f64,
    /// Every grid point with its inner-CV score, in declaration order.
    pub evaluated: Vec<(GridPoint, f64)>,
}

fn f1_from_preds(preds: &[u8], labels: &[u8]) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &y) in preds.iter().zip(labels) {
        match (p, y) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => {}
        }
    }
    if 2 * tp + fp + fn_ == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Evaluate every grid point by stratified inner-k-fold F1 at the 0.5 cutoff
/// and return the argmax. A grid point whose fit fails anywhere scores 0.
/// Ties keep the earliest point in declaration order.
pub fn grid_search(
    spec: &ClassifierSpec,
    x: &FeatureMatrix,
    y: &[u8],
    inner_k: usize,
    seed: u64,
) -> Result<GridSearchOutcome, MlError> {
    spec.validate()?;
    check_training_input(x, y)?;
    if inner_k < 2 {
        return Err(MlError::BadInnerK(inner_k));
    }

    let folds = stratified_test_folds(y, inner_k, mix_seed(&[seed, 0x122E5]));
    let all: BTreeSet<usize> = (0..y.len()).collect();

    let mut evaluated = Vec::new();
    let mut best: Option<(GridPoint, f64)> = None;
    for point in spec.grid_points() {
        let mut fold_scores = Vec::with_capacity(inner_k);
        let mut failed = false;
        for test_idx in &folds {
            if test_idx.is_empty() {
                continue;
            }
            let test_set: BTreeSet<usize> = test_idx.iter().copied().collect();
            let train_idx: Vec<usize> = all.difference(&test_set).copied().collect();
            let train_x = x.select_rows(&train_idx);
            let train_y: Vec<u8> = train_idx.iter().map(|&i| y[i]).collect();
            let test_x = x.select_rows(test_idx);
            let test_y: Vec<u8> = test_idx.iter().map(|&i| y[i]).collect();

            match fit_point(spec, &point, &train_x, &train_y) {
                Ok(model) => {
                    let probs = predict_proba(&model, &test_x)?;
                    let preds: Vec<u8> = probs.iter().map(|&p| u8::from(p >= 0.5)).collect();
                    fold_scores.push(f1_from_preds(&preds, &test_y));
                }
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        let score = if failed || fold_scores.is_empty() {
            0.0
        } else {
            fold_scores.iter().sum::<f64>() / fold_scores.len() as f64
        };
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((point.clone(), score));
        }
        evaluated.push((point, score));
    }
    let (best, inner_f1) = best.expect("grid is non-empty");
    Ok(GridSearchOutcome {
        best,
        inner_f1,
        evaluated,
    })
}
