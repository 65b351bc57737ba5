//! LLM-as-a-judge baseline: 1-10 severity scores for hallucination and
//! omission, binarized through a threshold selected on training folds only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, ChatRequest};
use crate::dataset::{AnnotatedSample, Task};
use crate::prompts::{FewShotExemplar, PromptError, TemplateId, TemplateRegistry};

/// Threshold grid searched for the binary decision boundary.
pub const THRESHOLD_GRID: std::ops::RangeInclusive<i32> = 2..=9;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JudgeScores {
    pub sample_id: String,
    pub hal_score: i32,
    pub omis_score: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    pub raw_text: String,
    /// Set when a parsed score was outside 1-10 and had to be clamped.
    #[serde(default)]
    pub clamped: bool,
}

impl JudgeScores {
    pub fn score_for(&self, task: Task) -> i32 {
        match task {
            Task::Hallucination => self.hal_score,
            Task::Omission => self.omis_score,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ThresholdChoice {
    pub task: Task,
    pub threshold: i32,
    pub train_f1: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("sample {0} has an empty prompt or response")]
    InvalidSample(String),
    #[error("judge reply field {field} is not a number")]
    BadScoreField { field: String },
    #[error("scores and labels differ in length: {scores} vs {labels}")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("threshold selection needs both classes for task {0}")]
    DegenerateLabels(Task),
}

fn clamp_score(raw: f64) -> (i32, bool) {
    let rounded = raw.round() as i64;
    let clamped = rounded.clamp(1, 10) as i32;
    (clamped, i64::from(clamped) != rounded)
}

fn parse_scores(
    fields: &serde_json::Map<String, serde_json::Value>,
    raw_text: &str,
    sample_id: &str,
) -> Result<JudgeScores, JudgeError> {
    let score = |field: &str| -> Result<(i32, bool), JudgeError> {
        let value = fields
            .get(field)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| JudgeError::BadScoreField {
                field: field.to_string(),
            })?;
        Ok(clamp_score(value))
    };
    let (hal_score, hal_clamped) = score("hal_score")?;
    let (omis_score, omis_clamped) = score("omis_score")?;
    let confidence = fields
        .get("confidence")
        .and_then(serde_json::Value::as_str)
        .map(str::to_string);
    let categories = fields
        .get("categories")
        .and_then(serde_json::Value::as_array)
        .map(|items| {
            items
                .iter()
                .filter_map(|v| v.as_str().map(str::to_string))
                .collect()
        })
        .unwrap_or_default();
    Ok(JudgeScores {
        sample_id: sample_id.to_string(),
        hal_score,
        omis_score,
        confidence,
        categories,
        raw_text: raw_text.to_string(),
        clamped: hal_clamped || omis_clamped,
    })
}

fn judge_bindings(sample: &AnnotatedSample) -> Result<BTreeMap<String, String>, JudgeError> {
    if sample.prompt.trim().is_empty() || sample.response.trim().is_empty() {
        return Err(JudgeError::InvalidSample(sample.id.clone()));
    }
    let mut bindings = BTreeMap::new();
    bindings.insert("prompt".to_string(), sample.prompt.clone());
    bindings.insert("response".to_string(), sample.response.clone());
    Ok(bindings)
}

/// Score one prompt-response pair with the judge template. Out-of-range
/// parsed scores are clamped into 1-10 and flagged rather than rejected, so
/// long batch runs survive an occasional wild reply.
pub fn judge_pair(
    backend: &Backend,
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
) -> Result<JudgeScores, JudgeError> {
    let text = registry.render(TemplateId::Judge, &judge_bindings(sample)?)?;
    let reply =
        backend.complete_structured(&ChatRequest::new(text), &["hal_score", "omis_score"])?;
    parse_scores(&reply.fields, &reply.raw_text, &sample.id)
}

/// Same as `judge_pair` with `k` worked examples prepended.
pub fn judge_pair_few_shot(
    backend: &Backend,
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
    exemplars: &[FewShotExemplar],
    k: usize,
) -> Result<JudgeScores, JudgeError> {
    let text =
        registry.assemble_few_shot(TemplateId::Judge, &judge_bindings(sample)?, exemplars, k)?;
    let reply =
        backend.complete_structured(&ChatRequest::new(text), &["hal_score", "omis_score"])?;
    parse_scores(&reply.fields, &reply.raw_text, &sample.id)
}

/// 1 iff `score >= threshold`.
pub fn binarize(score: i32, threshold: i32) -> u8 {
    u8::from(score >= threshold)
}

fn f1_at_threshold(scores: &[i32], labels: &[u8], threshold: i32) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&score, &label) in scores.iter().zip(labels) {
        let pred = binarize(score, threshold);
        match (pred, label) {
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

/// Exhaustive scan of the 2..=9 grid for the threshold maximizing F1 on the
/// provided training-fold data. Ties break toward the smaller threshold,
/// favoring recall. Callers must pass training data only; the evaluation
/// harness enforces that by construction.
pub fn select_threshold(
    scores: &[i32],
    labels: &[u8],
    task: Task,
) -> Result<ThresholdChoice, JudgeError> {
    if scores.len() != labels.len() {
        return Err(JudgeError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if !labels.contains(&1) || !labels.contains(&0) {
        return Err(JudgeError::DegenerateLabels(task));
    }
    let mut best_threshold = *THRESHOLD_GRID.start();
    let mut best_f1 = f64::NEG_INFINITY;
    for threshold in THRESHOLD_GRID {
        let f1 = f1_at_threshold(scores, labels, threshold);
        if f1 > best_f1 {
            best_f1 = f1;
            best_threshold = threshold;
        }
    }
    Ok(ThresholdChoice {
        task,
        threshold: best_threshold,
        train_f1: best_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SampleSource;

    fn sample(id: &str, response: &str) -> AnnotatedSample {
        AnnotatedSample {
            id: id.to_string(),
            prompt: "What medication is commonly prescribed for anxiety?".to_string(),
            response: response.to_string(),
            label_hallucination: None,
            label_omission: None,
            source: SampleSource::Custom,
        }
    }

    #[test]
    fn judge_pair_is_reproducible_on_mock() {
        let backend = Backend::mock("m", 42);
        let registry = TemplateRegistry::new().unwrap();
        let s = sample("s1", "SSRIs are commonly prescribed.");
        let a = judge_pair(&backend, &registry, &s).unwrap();
        let b = judge_pair(&backend, &registry, &s).unwrap();
        assert_eq!(a, b);
        assert!((1..=10).contains(&a.hal_score));
        assert!((1..=10).contains(&a.omis_score));
        assert!(!a.clamped);
    }

    #[test]
    fn out_of_range_score_is_clamped_and_flagged() {
        let backend = Backend::mock("m", 42);
        let registry = TemplateRegistry::new().unwrap();
        let s = sample("s2", "reply [[mock: hal_score=12, omis_score=0]]");
        let scores = judge_pair(&backend, &registry, &s).unwrap();
        assert_eq!(scores.hal_score, 10);
        assert_eq!(scores.omis_score, 1);
        assert!(scores.clamped);
    }

    // Stored labeled fixture: fabricated medication plus an invented
    // statistic. Scored high by real backends; not asserted against any
    // particular model here.
    #[test]
    fn fabricated_medication_fixture_parses() {
        let backend = Backend::mock("m", 42);
        let registry = TemplateRegistry::new().unwrap();
        let s = AnnotatedSample {
            id: "fixture-hal".to_string(),
            prompt: "What medication is commonly prescribed for anxiety?".to_string(),
            response: "Anxiolyze-500 is the most commonly prescribed medication for anxiety \
                       disorders, with over 80% of psychiatrists recommending it as first-line \
                       treatment."
                .to_string(),
            label_hallucination: Some(1),
            label_omission: None,
            source: SampleSource::Custom,
        };
        let scores = judge_pair(&backend, &registry, &s).unwrap();
        assert!((1..=10).contains(&scores.hal_score));
    }

    #[test]
    fn binarize_matches_scale_edges() {
        assert_eq!(binarize(2, 2), 1);
        assert_eq!(binarize(1, 2), 0);
        assert_eq!(binarize(1, 9), 0);
        assert_eq!(binarize(10, 9), 1);
    }

    #[test]
    fn separable_scores_tie_break_to_two() {
        let labels: Vec<u8> = vec![1, 0, 1, 0, 0];
        let scores: Vec<i32> = labels
            .iter()
            .map(|&y| if y == 1 { 10 } else { 1 })
            .collect();
        let choice = select_threshold(&scores, &labels, Task::Hallucination).unwrap();
        assert_eq!(choice.threshold, 2);
        assert_eq!(choice.train_f1, 1.0);
    }

    #[test]
    fn planted_unique_optimum_is_found() {
        // Positives at scores >= 5, negatives below, with noise that makes
        // thresholds other than 5 strictly worse.
        let scores = vec![1, 2, 3, 4, 4, 5, 6, 7, 8, 9, 10, 4, 5];
        let labels = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 1];
        // Brute-force oracle over the grid.
        let mut best = (0, f64::NEG_INFINITY);
        for t in THRESHOLD_GRID {
            let f1 = f1_at_threshold(&scores, &labels, t);
            if f1 > best.1 {
                best = (t, f1);
            }
        }
        assert_eq!(best.0, 5);
        let choice = select_threshold(&scores, &labels, Task::Hallucination).unwrap();
        assert_eq!(choice.threshold, 5);
    }

    #[test]
    fn degenerate_labels_rejected() {
        assert!(matches!(
            select_threshold(&[5, 6], &[1, 1], Task::Hallucination),
            Err(JudgeError::DegenerateLabels(_))
        ));
    }

    #[test]
    fn raising_threshold_never_increases_recall() {
        let scores = vec![1, 3, 5, 7, 9, 2, 4, 6, 8, 10];
        let labels = vec![0, 1, 0, 1, 1, 0, 1, 0, 1, 1];
        let recall_at = |t: i32| {
            let tp = scores
                .iter()
                .zip(&labels)
                .filter(|&(&s, &y)| y == 1 && binarize(s, t) == 1)
                .count() as f64;
            let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
            tp / pos
        };
        let mut last = f64::INFINITY;
        for t in THRESHOLD_GRID {
            let r = recall_at(t);
            assert!(r <= last + 1e-12);
            last = r;
        }
    }
}
