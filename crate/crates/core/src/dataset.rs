//! Labeled prompt-response corpora: loading, validation, summary statistics,
//! stratified folds, and balanced training splits.
//!
//! The canonical on-disk format is JSONL, one record per line, UTF-8, with
//! fields `id`, `prompt`, `response`, optional integer labels
//! `label_hallucination` / `label_omission` (0 or 1), and an optional
//! `source` tag. A small CSV converter normalizes public corpora into this
//! format via a column-mapping file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rng::{mix_seed, SplitMix64};
use crate::stratify::stratified_test_folds;

/// Which binary detection task a label or split refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Hallucination,
    Omission,
}

impl Task {
    pub fn label_of(&self, sample: &AnnotatedSample) -> Option<u8> {
        match self {
            Task::Hallucination => sample.label_hallucination,
            Task::Omission => sample.label_omission,
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            Task::Hallucination => "hal",
            Task::Omission => "omis",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    #[default]
    Custom,
    Kaggle,
    Synthetic,
}

/// One prompt-response pair with optional binary labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatedSample {
    pub id: String,
    pub prompt: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_hallucination: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_omission: Option<u8>,
    #[serde(default)]
    pub source: SampleSource,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DatasetStats {
    pub n_total: usize,
    pub n_pos_hal: usize,
    pub n_pos_omis: usize,
    pub pos_rate_hal: f64,
    pub pos_rate_omis: f64,
}

/// One fold of a stratified cross-validation split. Ids, not indices, so the
/// split survives dataset re-serialization.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has {got} labeled samples for task {task}, need at least {need}")]
    TooFewSamples { task: Task, got: usize, need: usize },
    #[error("no positive labels for task {0}")]
    NoPositives(Task),
    #[error("split has only one class for task {0}")]
    DegenerateClass(Task),
    #[error("fold count must be at least 2, got {0}")]
    BadFoldCount(usize),
    #[error("unknown sample id {0}")]
    UnknownId(String),
    #[error("sample {0} has no label for task {1}")]
    UnlabeledSample(String, Task),
    #[error("duplicate sample id {0}")]
    DuplicateId(String),
    #[error("sample {id}: {problem}")]
    InvalidSample { id: String, problem: String },
    #[error("csv mapping column {0} not found in header")]
    MissingColumn(String),
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
}

/// Per-line validation problem reported by the JSONL loader. The line number
/// is 1-based.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub kind: LineIssueKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LineIssueKind {
    Malformed,
    MissingField,
    InvalidLabel,
    EmptyText,
    DuplicateId,
}

impl fmt::Display for LineIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {:?}: {}", self.line, self.kind, self.detail)
    }
}

/// An in-memory corpus. Samples keep file order; ids are unique.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    samples: Vec<AnnotatedSample>,
    by_id: BTreeMap<String, usize>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: Vec<AnnotatedSample>) -> Result<Self, DatasetError> {
        let mut ds = Dataset::new();
        for s in samples {
            ds.push(s)?;
        }
        Ok(ds)
    }

    /// Validates the sample invariants before inserting.
    pub fn push(&mut self, sample: AnnotatedSample) -> Result<(), DatasetError> {
        validate_sample(&sample)?;
        if self.by_id.contains_key(&sample.id) {
            return Err(DatasetError::DuplicateId(sample.id));
        }
        self.by_id.insert(sample.id.clone(), self.samples.len());
        self.samples.push(sample);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[AnnotatedSample] {
        &self.samples
    }

    pub fn get(&self, id: &str) -> Option<&AnnotatedSample> {
        self.by_id.get(id).map(|&i| &self.samples[i])
    }

    /// Samples carrying a label for `task`, in dataset order.
    pub fn labeled_for(&self, task: Task) -> Vec<&AnnotatedSample> {
        self.samples
            .iter()
            .filter(|s| task.label_of(s).is_some())
            .collect()
    }
}

fn validate_sample(sample: &AnnotatedSample) -> Result<(), DatasetError> {
    let invalid = |problem: &str| DatasetError::InvalidSample {
        id: sample.id.clone(),
        problem: problem.to_string(),
    };
    if sample.id.trim().is_empty() {
        return Err(invalid("empty id"));
    }
    if sample.prompt.trim().is_empty() {
        return Err(invalid("empty prompt"));
    }
    if sample.response.trim().is_empty() {
        return Err(invalid("empty response"));
    }
    for (name, label) in [
        ("label_hallucination", sample.label_hallucination),
        ("label_omission", sample.label_omission),
    ] {
        if let Some(v) = label {
            if v > 1 {
                return Err(invalid(&format!("{name} must be 0 or 1, got {v}")));
            }
        }
    }
    Ok(())
}

/// Result of loading a JSONL file: valid samples plus per-line diagnostics
/// for everything that was rejected.
#[derive(Debug)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub line_issues: Vec<LineIssue>,
}

/// Load a canonical JSONL corpus. Invalid lines are reported with their line
/// numbers and skipped; valid lines load regardless.
pub fn load_jsonl(path: &Path) -> Result<LoadReport, DatasetError> {
    let file = fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut dataset = Dataset::new();
    let mut line_issues = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Ok(sample) => {
                if dataset.by_id.contains_key(&sample.id) {
                    line_issues.push(LineIssue {
                        line: line_no,
                        kind: LineIssueKind::DuplicateId,
                        detail: format!("id {} already seen", sample.id),
                    });
                } else {
                    // push cannot fail: parse_record validated the invariants.
                    dataset.push(sample).expect("validated sample");
                }
            }
            Err(issue_of) => line_issues.push(LineIssue {
                line: line_no,
                kind: issue_of.0,
                detail: issue_of.1,
            }),
        }
    }
    Ok(LoadReport {
        dataset,
        line_issues,
    })
}

fn parse_record(line: &str) -> Result<AnnotatedSample, (LineIssueKind, String)> {
    let value: serde_json::Value = serde_json::from_str(line)
        .map_err(|e| (LineIssueKind::Malformed, format!("not valid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or((LineIssueKind::Malformed, "not a JSON object".to_string()))?;

    let text_field = |name: &str| -> Result<String, (LineIssueKind, String)> {
        let v = obj
            .get(name)
            .ok_or((LineIssueKind::MissingField, format!("missing {name}")))?;
        let s = v.as_str().ok_or((
            LineIssueKind::MissingField,
            format!("{name} is not a string"),
        ))?;
        if s.trim().is_empty() {
            return Err((LineIssueKind::EmptyText, format!("{name} is empty")));
        }
        Ok(s.to_string())
    };

    let id = text_field("id")?;
    let prompt = text_field("prompt")?;
    let response = text_field("response")?;

    let label_field = |name: &str| -> Result<Option<u8>, (LineIssueKind, String)> {
        match obj.get(name) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => {
                let n = v.as_i64().ok_or((
                    LineIssueKind::InvalidLabel,
                    format!("{name} must be an integer 0 or 1"),
                ))?;
                if n == 0 || n == 1 {
                    Ok(Some(n as u8))
                } else {
                    Err((
                        LineIssueKind::InvalidLabel,
                        format!("{name} must be 0 or 1, got {n}"),
                    ))
                }
            }
        }
    };

    let label_hallucination = label_field("label_hallucination")?;
    let label_omission = label_field("label_omission")?;
    let source = match obj.get("source") {
        None | Some(serde_json::Value::Null) => SampleSource::Custom,
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|_| (LineIssueKind::Malformed, format!("bad source tag {v}")))?,
    };

    Ok(AnnotatedSample {
        id,
        prompt,
        response,
        label_hallucination,
        label_omission,
        source,
    })
}

/// Write a dataset in the canonical JSONL format.
pub fn write_jsonl(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = fs::File::create(path).map_err(io_err)?;
    for sample in dataset.samples() {
        let line = serde_json::to_string(sample).expect("sample serializes");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Counts and exact positive rates. Rates are rounded only at display time.
pub fn compute_stats(dataset: &Dataset) -> Result<DatasetStats, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let n_total = dataset.len();
    let n_pos_hal = dataset
        .samples()
        .iter()
        .filter(|s| s.label_hallucination == Some(1))
        .count();
    let n_pos_omis = dataset
        .samples()
        .iter()
        .filter(|s| s.label_omission == Some(1))
        .count();
    Ok(DatasetStats {
        n_total,
        n_pos_hal,
        n_pos_omis,
        pos_rate_hal: n_pos_hal as f64 / n_total as f64,
        pos_rate_omis: n_pos_omis as f64 / n_total as f64,
    })
}

/// Stratified k-fold split over the samples labeled for `task`.
///
/// Deterministic for a fixed (dataset order, k, seed). Test sets form a
/// disjoint cover of the labeled ids and each holds `n_pos/k` positives
/// within one.
pub fn stratified_folds(
    dataset: &Dataset,
    k: usize,
    task: Task,
    seed: u64,
) -> Result<Vec<FoldSplit>, DatasetError> {
    if k < 2 {
        return Err(DatasetError::BadFoldCount(k));
    }
    let labeled = dataset.labeled_for(task);
    if labeled.len() < k {
        return Err(DatasetError::TooFewSamples {
            task,
            got: labeled.len(),
            need: k,
        });
    }
    let labels: Vec<u8> = labeled
        .iter()
        .map(|s| task.label_of(s).expect("labeled"))
        .collect();
    if !labels.contains(&1) {
        return Err(DatasetError::NoPositives(task));
    }

    let fold_seed = mix_seed(&[seed, k as u64, task as u64]);
    let test_folds = stratified_test_folds(&labels, k, fold_seed);

    let mut splits = Vec::with_capacity(k);
    for (fold_index, test_idx) in test_folds.iter().enumerate() {
        let in_test: Vec<bool> = {
            let mut mask = vec![false; labeled.len()];
            for &i in test_idx {
                mask[i] = true;
            }
            mask
        };
        let test_ids = test_idx.iter().map(|&i| labeled[i].id.clone()).collect();
        let train_ids = labeled
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_test[*i])
            .map(|(_, s)| s.id.clone())
            .collect();
        splits.push(FoldSplit {
            fold_index,
            train_ids,
            test_ids,
        });
    }
    Ok(splits)
}

/// Undersample negatives to a 1:1 ratio with positives, keeping every
/// positive. Test folds are never balanced; this is for training splits only.
/// Output preserves the input id order and is always a subset of the input.
pub fn balance_training_split(
    dataset: &Dataset,
    ids: &[String],
    task: Task,
    seed: u64,
) -> Result<Vec<String>, DatasetError> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for id in ids {
        let sample = dataset
            .get(id)
            .ok_or_else(|| DatasetError::UnknownId(id.clone()))?;
        match task.label_of(sample) {
            Some(1) => pos.push(id.clone()),
            Some(_) => neg.push(id.clone()),
            None => return Err(DatasetError::UnlabeledSample(id.clone(), task)),
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(DatasetError::DegenerateClass(task));
    }
    if neg.len() <= pos.len() {
        return Ok(ids.to_vec());
    }

    let mut rng = SplitMix64::new(mix_seed(&[seed, task as u64, ids.len() as u64]));
    let keep_idx = rng.sample_indices(neg.len(), pos.len());
    let mut keep_mask = vec![false; neg.len()];
    for i in keep_idx {
        keep_mask[i] = true;
    }
    let kept_neg: std::collections::BTreeSet<&str> = neg
        .iter()
        .enumerate()
        .filter(|(i, _)| keep_mask[*i])
        .map(|(_, id)| id.as_str())
        .collect();

    Ok(ids
        .iter()
        .filter(|id| {
            let sample = dataset.get(id).expect("checked above");
            task.label_of(sample) == Some(1) || kept_neg.contains(id.as_str())
        })
        .cloned()
        .collect())
}

/// Column mapping for converting a CSV corpus to the canonical schema.
/// Stored as a small JSON file next to the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvMapping {
    pub prompt: String,
    pub response: String,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub label_hallucination: Option<String>,
    #[serde(default)]
    pub label_omission: Option<String>,
    #[serde(default = "default_csv_source")]
    pub source: SampleSource,
    #[serde(default = "default_id_prefix")]
    pub id_prefix: String,
}

fn default_csv_source() -> SampleSource {
    SampleSource::Kaggle
}

fn default_id_prefix() -> String {
    "row".to_string()
}

impl CsvMapping {
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| DatasetError::InvalidSample {
            id: path.display().to_string(),
            problem: format!("bad mapping file: {e}"),
        })
    }
}

/// Convert a CSV file to canonical samples using a column mapping.
/// Labels are taken as-is and must be 0 or 1 when present; rows with
/// validation problems are reported as line issues (line = 1-based data row).
pub fn convert_csv(path: &Path, mapping: &CsvMapping) -> Result<LoadReport, DatasetError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let prompt_col = col(&mapping.prompt)?;
    let response_col = col(&mapping.response)?;
    let id_col = mapping.id.as_deref().map(col).transpose()?;
    let hal_col = mapping
        .label_hallucination
        .as_deref()
        .map(col)
        .transpose()?;
    let omis_col = mapping.label_omission.as_deref().map(col).transpose()?;

    let mut dataset = Dataset::new();
    let mut line_issues = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let line_no = row_idx + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                line_issues.push(LineIssue {
                    line: line_no,
                    kind: LineIssueKind::Malformed,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let cell = |i: usize| record.get(i).unwrap_or("").to_string();
        let label_cell = |i: Option<usize>| -> Result<Option<u8>, String> {
            let Some(i) = i else { return Ok(None) };
            let raw = record.get(i).unwrap_or("").trim().to_string();
            if raw.is_empty() {
                return Ok(None);
            }
            match raw.parse::<i64>() {
                Ok(0) => Ok(Some(0)),
                Ok(1) => Ok(Some(1)),
                _ => Err(format!("label must be 0 or 1, got {raw:?}")),
            }
        };

        let id = match id_col {
            Some(i) => cell(i),
            None => format!("{}-{:06}", mapping.id_prefix, line_no),
        };
        let (label_hallucination, label_omission) =
            match (label_cell(hal_col), label_cell(omis_col)) {
                (Ok(h), Ok(o)) => (h, o),
                (Err(e), _) | (_, Err(e)) => {
                    line_issues.push(LineIssue {
                        line: line_no,
                        kind: LineIssueKind::InvalidLabel,
                        detail: e,
                    });
                    continue;
                }
            };

        let sample = AnnotatedSample {
            id,
            prompt: cell(prompt_col),
            response: cell(response_col),
            label_hallucination,
            label_omission,
            source: mapping.source,
        };
        if let Err(e) = validate_sample(&sample) {
            line_issues.push(LineIssue {
                line: line_no,
                kind: LineIssueKind::EmptyText,
                detail: e.to_string(),
            });
            continue;
        }
        if dataset.by_id.contains_key(&sample.id) {
            line_issues.push(LineIssue {
                line: line_no,
                kind: LineIssueKind::DuplicateId,
                detail: format!("id {} already seen", sample.id),
            });
            continue;
        }
        dataset.push(sample).expect("validated sample");
    }
    Ok(LoadReport {
        dataset,
        line_issues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, hal: Option<u8>, omis: Option<u8>) -> AnnotatedSample {
        AnnotatedSample {
            id: id.to_string(),
            prompt: format!("prompt for {id}"),
            response: format!("response for {id}"),
            label_hallucination: hal,
            label_omission: omis,
            source: SampleSource::Custom,
        }
    }

    fn labeled_dataset(n: usize, n_pos: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| sample(&format!("s{i:04}"), Some(u8::from(i < n_pos)), None))
            .collect();
        Dataset::from_samples(samples).unwrap()
    }

    #[test]
    fn load_jsonl_accepts_valid_lines() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            r#"{{"id":"a","prompt":"p","response":"r","label_hallucination":1}}"#
        )
        .unwrap();
        writeln!(file, r#"{{"id":"b","prompt":"p","response":"r"}}"#).unwrap();
        writeln!(
            file,
            r#"{{"id":"c","prompt":"p","response":"r","label_omission":0}}"#
        )
        .unwrap();
        let report = load_jsonl(file.path()).unwrap();
        assert_eq!(report.dataset.len(), 3);
        assert!(report.line_issues.is_empty());
    }

    #[test]
    fn load_jsonl_reports_bad_label_and_keeps_rest() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            r#"{{"id":"a","prompt":"p","response":"r","label_hallucination":2}}"#
        )
        .unwrap();
        writeln!(file, r#"{{"id":"b","prompt":"p","response":"r"}}"#).unwrap();
        let report = load_jsonl(file.path()).unwrap();
        assert_eq!(report.dataset.len(), 1);
        assert_eq!(report.line_issues.len(), 1);
        assert_eq!(report.line_issues[0].line, 1);
        assert_eq!(report.line_issues[0].kind, LineIssueKind::InvalidLabel);
    }

    #[test]
    fn load_jsonl_reports_missing_field_empty_text_duplicate() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, r#"{{"id":"a","response":"r"}}"#).unwrap();
        writeln!(file, r#"{{"id":"b","prompt":"  ","response":"r"}}"#).unwrap();
        writeln!(file, r#"{{"id":"c","prompt":"p","response":"r"}}"#).unwrap();
        writeln!(file, r#"{{"id":"c","prompt":"p2","response":"r2"}}"#).unwrap();
        let report = load_jsonl(file.path()).unwrap();
        assert_eq!(report.dataset.len(), 1);
        let kinds: Vec<_> = report.line_issues.iter().map(|i| i.kind).collect();
        assert_eq!(
            kinds,
            vec![
                LineIssueKind::MissingField,
                LineIssueKind::EmptyText,
                LineIssueKind::DuplicateId
            ]
        );
        assert_eq!(
            report
                .line_issues
                .iter()
                .map(|i| i.line)
                .collect::<Vec<_>>(),
            vec![1, 2, 4]
        );
    }

    #[test]
    fn stats_match_reported_rates() {
        let ds = labeled_dataset(4418, 87);
        let stats = compute_stats(&ds).unwrap();
        assert_eq!(stats.n_pos_hal, 87);
        assert!((stats.pos_rate_hal - 0.0197).abs() < 5e-5);
    }

    #[test]
    fn stats_zero_and_half_rates() {
        let ds = labeled_dataset(10, 0);
        let stats = compute_stats(&ds).unwrap();
        assert_eq!(stats.pos_rate_hal, 0.0);

        let ds = labeled_dataset(10, 5);
        assert_eq!(compute_stats(&ds).unwrap().pos_rate_hal, 0.5);
    }

    #[test]
    fn stats_empty_dataset_is_error() {
        assert!(matches!(
            compute_stats(&Dataset::new()),
            Err(DatasetError::EmptyDataset)
        ));
    }

    #[test]
    fn folds_have_exact_positive_counts_when_divisible() {
        let ds = labeled_dataset(100, 10);
        let folds = stratified_folds(&ds, 5, Task::Hallucination, 42).unwrap();
        for fold in &folds {
            let pos = fold
                .test_ids
                .iter()
                .filter(|id| ds.get(id).unwrap().label_hallucination == Some(1))
                .count();
            assert_eq!(pos, 2);
        }
    }

    #[test]
    fn folds_partition_labeled_ids() {
        let ds = labeled_dataset(103, 11);
        let folds = stratified_folds(&ds, 5, Task::Hallucination, 42).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for fold in &folds {
            for id in &fold.test_ids {
                assert!(seen.insert(id.clone()), "id {id} in two test folds");
            }
            let train: std::collections::BTreeSet<_> = fold.train_ids.iter().collect();
            assert!(fold.test_ids.iter().all(|id| !train.contains(id)));
        }
        assert_eq!(seen.len(), 103);
    }

    #[test]
    fn two_fold_split_of_four_samples() {
        let ds = labeled_dataset(4, 2);
        let folds = stratified_folds(&ds, 2, Task::Hallucination, 0).unwrap();
        for fold in &folds {
            let pos = fold
                .test_ids
                .iter()
                .filter(|id| ds.get(id).unwrap().label_hallucination == Some(1))
                .count();
            assert_eq!(pos, 1);
        }
    }

    #[test]
    fn folds_are_deterministic() {
        let ds = labeled_dataset(60, 9);
        let a = stratified_folds(&ds, 5, Task::Hallucination, 42).unwrap();
        let b = stratified_folds(&ds, 5, Task::Hallucination, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fold_errors() {
        let ds = labeled_dataset(10, 0);
        assert!(matches!(
            stratified_folds(&ds, 5, Task::Hallucination, 1),
            Err(DatasetError::NoPositives(_))
        ));
        let ds = labeled_dataset(3, 1);
        assert!(matches!(
            stratified_folds(&ds, 5, Task::Hallucination, 1),
            Err(DatasetError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn balance_undersamples_to_one_to_one() {
        let ds = labeled_dataset(100, 3);
        let ids: Vec<String> = ds.samples().iter().map(|s| s.id.clone()).collect();
        let balanced = balance_training_split(&ds, &ids, Task::Hallucination, 42).unwrap();
        let pos = balanced
            .iter()
            .filter(|id| ds.get(id).unwrap().label_hallucination == Some(1))
            .count();
        assert_eq!(pos, 3);
        assert_eq!(balanced.len(), 6);
        let input: std::collections::BTreeSet<_> = ids.iter().collect();
        assert!(balanced.iter().all(|id| input.contains(id)));
    }

    #[test]
    fn balance_is_identity_when_already_balanced() {
        let ds = labeled_dataset(6, 3);
        let ids: Vec<String> = ds.samples().iter().map(|s| s.id.clone()).collect();
        let balanced = balance_training_split(&ds, &ids, Task::Hallucination, 7).unwrap();
        assert_eq!(balanced, ids);

        let ds = labeled_dataset(2, 1);
        let ids: Vec<String> = ds.samples().iter().map(|s| s.id.clone()).collect();
        let balanced = balance_training_split(&ds, &ids, Task::Hallucination, 7).unwrap();
        assert_eq!(balanced, ids);
    }

    #[test]
    fn balance_rejects_single_class() {
        let ds = labeled_dataset(5, 5);
        let ids: Vec<String> = ds.samples().iter().map(|s| s.id.clone()).collect();
        assert!(matches!(
            balance_training_split(&ds, &ids, Task::Hallucination, 7),
            Err(DatasetError::DegenerateClass(_))
        ));
    }

    #[test]
    fn csv_conversion_round_trips_kaggle_counts() {
        let mut csv_file = tempfile::NamedTempFile::new().unwrap();
        writeln!(csv_file, "question,answer,hal,omi").unwrap();
        for i in 0..994 {
            let hal = u8::from(i < 243);
            let omi = u8::from(i < 511);
            writeln!(csv_file, "q{i},a{i},{hal},{omi}").unwrap();
        }
        let mapping = CsvMapping {
            prompt: "question".into(),
            response: "answer".into(),
            id: None,
            label_hallucination: Some("hal".into()),
            label_omission: Some("omi".into()),
            source: SampleSource::Kaggle,
            id_prefix: "kaggle".into(),
        };
        let report = convert_csv(csv_file.path(), &mapping).unwrap();
        assert!(report.line_issues.is_empty());
        let stats = compute_stats(&report.dataset).unwrap();
        assert_eq!(stats.n_total, 994);
        assert_eq!(stats.n_pos_hal, 243);
        assert_eq!(stats.n_pos_omis, 511);
    }
}
