//! Python bindings for the hallucination/omission detection pipeline.
//!
//! Exposes dataset loading and splitting, mock-backed judge and feature
//! extraction, cross-validated evaluation, and the metric primitives.
//! Structured results cross the boundary as plain dicts/lists.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use halo_core::backend::Backend;
use halo_core::dataset::{self, Task};
use halo_core::ensemble::{majority_vote as vote, rule_combine as combine, RuleMode};
use halo_core::eval::{self, ConfusionCounts, CvConfig, Pipeline};
use halo_core::judge;
use halo_core::ml::{ClassifierSpec, Family};
use halo_core::prompts::TemplateRegistry;
use halo_core::store::{extract_dataset, ExtractionPlan, FeatureStore};
use halo_core::synthetic::{generate, SyntheticConfig};
use halo_core::textstats;

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_task(name: &str) -> PyResult<Task> {
    match name {
        "hal" | "hallucination" => Ok(Task::Hallucination),
        "omis" | "omission" => Ok(Task::Omission),
        other => Err(value_err(format!("unknown task {other:?}"))),
    }
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    Ok(match value {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().unbind().into(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .unbind()
                    .into()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.unbind().into(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.unbind().into()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.unbind().into()
        }
    })
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value).map_err(runtime_err)?;
    json_to_py(py, &json)
}

/// A labeled prompt-response corpus in the canonical JSONL format.
#[pyclass(name = "Dataset")]
struct PyDataset {
    inner: dataset::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Load a canonical JSONL file; raises on any invalid line.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let report = dataset::load_jsonl(&path).map_err(runtime_err)?;
        if !report.line_issues.is_empty() {
            return Err(value_err(format!(
                "{} invalid lines; first: {}",
                report.line_issues.len(),
                report.line_issues[0]
            )));
        }
        Ok(Self {
            inner: report.dataset,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Counts and exact positive rates.
    fn stats(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let stats = dataset::compute_stats(&self.inner).map_err(runtime_err)?;
        to_py(py, &stats)
    }

    /// Stratified k-fold split for a task; returns (train_ids, test_ids)
    /// pairs.
    fn stratified_folds(
        &self,
        py: Python<'_>,
        k: usize,
        task: &str,
        seed: u64,
    ) -> PyResult<Py<PyAny>> {
        let folds = dataset::stratified_folds(&self.inner, k, parse_task(task)?, seed)
            .map_err(value_err)?;
        let list = PyList::empty(py);
        for fold in folds {
            list.append((fold.train_ids, fold.test_ids))?;
        }
        Ok(list.unbind().into())
    }

    /// Undersample negatives to a 1:1 ratio within the given ids.
    fn balance_training_split(
        &self,
        ids: Vec<String>,
        task: &str,
        seed: u64,
    ) -> PyResult<Vec<String>> {
        dataset::balance_training_split(&self.inner, &ids, parse_task(task)?, seed)
            .map_err(value_err)
    }
}

/// Write a synthetic planted-signal dataset to `path` and return its size.
#[pyfunction]
#[pyo3(signature = (path, n_samples, n_positive, task="hal", seed=42))]
fn generate_synthetic(
    path: PathBuf,
    n_samples: usize,
    n_positive: usize,
    task: &str,
    seed: u64,
) -> PyResult<usize> {
    let config = SyntheticConfig {
        n_positive,
        ..SyntheticConfig::planted(n_samples, parse_task(task)?, seed)
    };
    let dataset = generate(&config);
    dataset::write_jsonl(&dataset, &path).map_err(runtime_err)?;
    Ok(dataset.len())
}

fn load_dataset(path: &Path) -> PyResult<dataset::Dataset> {
    let report = dataset::load_jsonl(path).map_err(runtime_err)?;
    if !report.line_issues.is_empty() {
        return Err(value_err(format!(
            "{} invalid lines in {}",
            report.line_issues.len(),
            path.display()
        )));
    }
    Ok(report.dataset)
}

/// Run judge + five-dimension extraction with the deterministic mock backend,
/// caching into `cache_path`. Returns the extraction summary.
#[pyfunction]
#[pyo3(signature = (dataset_path, cache_path, mock_seed=42, workers=4))]
fn extract_features(
    py: Python<'_>,
    dataset_path: PathBuf,
    cache_path: PathBuf,
    mock_seed: u64,
    workers: usize,
) -> PyResult<Py<PyAny>> {
    let dataset = load_dataset(&dataset_path)?;
    let backend = Backend::mock("mock", mock_seed);
    let registry = TemplateRegistry::new().map_err(runtime_err)?;
    let (_, summary) = extract_dataset(
        &dataset,
        &backend,
        &[],
        &registry,
        &ExtractionPlan::standard(),
        &cache_path,
        workers,
    )
    .map_err(runtime_err)?;
    to_py(py, &summary)
}

/// Run one stratified balanced cross-validation experiment and return the
/// full report as a dict.
#[pyfunction]
#[pyo3(signature = (dataset_path, cache_path, task="hal", pipeline="features_ml", family="logistic", k=5, seed=42))]
#[allow(clippy::too_many_arguments)]
fn run_cv(
    py: Python<'_>,
    dataset_path: PathBuf,
    cache_path: PathBuf,
    task: &str,
    pipeline: &str,
    family: &str,
    k: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let dataset = load_dataset(&dataset_path)?;
    let store = FeatureStore::load(&cache_path).map_err(runtime_err)?;
    let pipeline = Pipeline::parse(pipeline)
        .ok_or_else(|| value_err(format!("unknown pipeline {pipeline:?}")))?;
    let spec = if pipeline.needs_classifier() {
        let family =
            Family::parse(family).ok_or_else(|| value_err(format!("unknown family {family:?}")))?;
        Some(ClassifierSpec::default_for(family, seed))
    } else {
        None
    };
    let config = CvConfig {
        k,
        seed,
        ..CvConfig::default()
    };
    let report = eval::run_cv(
        &dataset,
        Some(&store),
        parse_task(task)?,
        pipeline,
        spec.as_ref(),
        &config,
    )
    .map_err(runtime_err)?;
    to_py(py, &report)
}

/// Judge one prompt-response pair with the mock backend.
#[pyfunction]
#[pyo3(signature = (prompt, response, mock_seed=42))]
fn judge_sample(
    py: Python<'_>,
    prompt: &str,
    response: &str,
    mock_seed: u64,
) -> PyResult<Py<PyAny>> {
    let backend = Backend::mock("mock", mock_seed);
    let registry = TemplateRegistry::new().map_err(runtime_err)?;
    let sample = dataset::AnnotatedSample {
        id: "adhoc".to_string(),
        prompt: prompt.to_string(),
        response: response.to_string(),
        label_hallucination: None,
        label_omission: None,
        source: dataset::SampleSource::Custom,
    };
    let scores = judge::judge_pair(&backend, &registry, &sample).map_err(runtime_err)?;
    to_py(py, &scores)
}

/// The 29 non-LLM baseline text statistics as a dict.
#[pyfunction]
fn compute_text_stats(py: Python<'_>, prompt: &str, response: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &textstats::compute_text_stats(prompt, response))
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    eval::roc_auc(&scores, &labels).map_err(value_err)
}

#[pyfunction]
fn pr_auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    eval::pr_auc(&scores, &labels).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (tp, fp, tn, fn_))]
fn metrics_from_confusion(
    py: Python<'_>,
    tp: usize,
    fp: usize,
    tn: usize,
    fn_: usize,
) -> PyResult<Py<PyAny>> {
    let report =
        eval::metrics_from_confusion(&ConfusionCounts { tp, fp, tn, fn_ }).map_err(value_err)?;
    to_py(py, &report)
}

#[pyfunction]
fn pearson_correlation(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    halo_core::ablation::pearson_correlation(&x, &y).map_err(value_err)
}

/// Grid-search the judge decision threshold on 1-10 scores; returns
/// (threshold, train_f1).
#[pyfunction]
#[pyo3(signature = (scores, labels, task="hal"))]
fn select_threshold(scores: Vec<i32>, labels: Vec<u8>, task: &str) -> PyResult<(i32, f64)> {
    let choice = judge::select_threshold(&scores, &labels, parse_task(task)?).map_err(value_err)?;
    Ok((choice.threshold, choice.train_f1))
}

/// Combine judge and classifier flags: mode is "OR" or "AND".
#[pyfunction]
fn rule_combine(judge_flag: u8, ml_flag: u8, mode: &str) -> PyResult<u8> {
    let mode = match mode {
        "OR" | "or" => RuleMode::Or,
        "AND" | "and" => RuleMode::And,
        other => return Err(value_err(format!("unknown rule mode {other:?}"))),
    };
    Ok(combine(judge_flag, ml_flag, mode))
}

/// Majority vote over binary flags; returns (decision, tie).
#[pyfunction]
fn majority_vote(flags: Vec<u8>) -> PyResult<(u8, bool)> {
    let outcome = vote(&flags).map_err(value_err)?;
    Ok((outcome.decision, outcome.tie))
}

/// The ordered names of the 15 enhanced-vector features.
#[pyfunction]
fn enhanced_feature_names() -> Vec<String> {
    halo_core::synthetic::enhanced_feature_names()
}

/// Per-sample cached judge + dimensional features as a dict keyed by id.
#[pyfunction]
fn load_feature_cache(py: Python<'_>, cache_path: PathBuf) -> PyResult<Py<PyAny>> {
    let store = FeatureStore::load(&cache_path).map_err(runtime_err)?;
    let dict = PyDict::new(py);
    for record in store.records() {
        let mut row: BTreeMap<String, f64> = record
            .dimensions
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        if let Some(judge) = &record.judge {
            row.insert("hal_score".to_string(), f64::from(judge.hal_score));
            row.insert("omis_score".to_string(), f64::from(judge.omis_score));
        }
        dict.set_item(record.sample_id.clone(), to_py(py, &row)?)?;
    }
    Ok(dict.unbind().into())
}

#[pymodule]
fn halo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(run_cv, m)?)?;
    m.add_function(wrap_pyfunction!(judge_sample, m)?)?;
    m.add_function(wrap_pyfunction!(compute_text_stats, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(pr_auc, m)?)?;
    m.add_function(wrap_pyfunction!(metrics_from_confusion, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(select_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(rule_combine, m)?)?;
    m.add_function(wrap_pyfunction!(majority_vote, m)?)?;
    m.add_function(wrap_pyfunction!(enhanced_feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(load_feature_cache, m)?)?;
    Ok(())
}
