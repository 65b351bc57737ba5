//! Specialized detection variants: rule-based judge/ML combination,
//! multi-LLM scoring with aggregated features, binary-logit probabilities,
//! and majority voting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, ChatRequest};
use crate::dataset::AnnotatedSample;
use crate::prompts::{PromptError, TemplateId, TemplateRegistry};
use crate::textstats::compute_text_stats;

/// The six dimensions each backend scores independently.
pub const MULTI_DIMENSIONS: [&str; 6] = [
    "hallucination",
    "omission",
    "therapist_impersonation",
    "human_likeness",
    "contradiction",
    "relevance",
];

/// Aggregated statistics computed per dimension; 6 x 6 = 36 features.
pub const AGGREGATE_STATS: [&str; 6] = [
    "mean",
    "weighted_mean",
    "binary_probability",
    "std",
    "agreement_rate",
    "max",
];

pub const DEFAULT_BINARIZE_THRESHOLD: f64 = 5.0;

#[derive(Debug, thiserror::Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("multi-LLM scoring needs at least 2 backends, got {0}")]
    TooFewBackends(usize),
    #[error("all {0} backends failed for this sample")]
    AllBackendsFailed(usize),
    #[error("no weight configured for backend {0}")]
    MissingWeight(String),
    #[error("majority vote over an empty flag list")]
    EmptyVote,
    #[error("backend reply field {field} is not numeric")]
    BadField { field: String },
}

/// Per-backend scores on the six dimensions. Backends that failed are listed
/// in `absent` and excluded from aggregation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MultiJudgeScores {
    pub sample_id: String,
    /// backend_id -> dimension -> score (1-10).
    pub scores: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub absent: Vec<String>,
}

impl MultiJudgeScores {
    pub fn backend_count(&self) -> usize {
        self.scores.len()
    }
}

/// Name-aligned aggregated (36) and individual (raw + binarized flag per
/// backend-dimension) feature tables.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AggregatedFeatures {
    pub sample_id: String,
    pub aggregated: Vec<(String, f64)>,
    pub individual: Vec<(String, f64)>,
}

/// OR / AND combination of the judge flag with the classifier flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RuleMode {
    Or,
    And,
}

pub fn rule_combine(judge_flag: u8, ml_flag: u8, mode: RuleMode) -> u8 {
    match mode {
        RuleMode::Or => judge_flag | ml_flag,
        RuleMode::And => judge_flag & ml_flag,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub decision: u8,
    /// Set when an even vote split was broken toward positive.
    pub tie: bool,
}

/// Majority of binary flags; even ties break positive and are flagged.
pub fn majority_vote(flags: &[u8]) -> Result<VoteOutcome, EnsembleError> {
    if flags.is_empty() {
        return Err(EnsembleError::EmptyVote);
    }
    let positives = flags.iter().filter(|&&f| f == 1).count();
    let negatives = flags.len() - positives;
    Ok(VoteOutcome {
        decision: u8::from(positives >= negatives),
        tie: positives == negatives,
    })
}

const MULTI_FIELDS: [(&str, &str); 6] = [
    ("hallucination_score", "hallucination"),
    ("omission_score", "omission"),
    ("therapist_impersonation_score", "therapist_impersonation"),
    ("human_likeness_score", "human_likeness"),
    ("contradiction_score", "contradiction"),
    ("relevance_score", "relevance"),
];

/// Query every backend with the six-dimension judge template. A backend that
/// fails is marked absent; only a total wipeout is an error.
pub fn multi_llm_scores(
    backends: &[&Backend],
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
) -> Result<MultiJudgeScores, EnsembleError> {
    if backends.len() < 2 {
        return Err(EnsembleError::TooFewBackends(backends.len()));
    }
    let mut bindings = BTreeMap::new();
    bindings.insert("prompt".to_string(), sample.prompt.clone());
    bindings.insert("response".to_string(), sample.response.clone());
    let text = registry.render(TemplateId::MultiLlmJudge, &bindings)?;
    let required: Vec<&str> = MULTI_FIELDS.iter().map(|(f, _)| *f).collect();

    let mut scores = BTreeMap::new();
    let mut absent = Vec::new();
    for backend in backends {
        match backend.complete_structured(&ChatRequest::new(text.clone()), &required) {
            Ok(reply) => {
                let mut dims = BTreeMap::new();
                for (field, dimension) in MULTI_FIELDS {
                    let value = reply
                        .fields
                        .get(field)
                        .and_then(serde_json::Value::as_f64)
                        .ok_or_else(|| EnsembleError::BadField {
                            field: field.to_string(),
                        })?;
                    dims.insert(dimension.to_string(), value.clamp(1.0, 10.0));
                }
                scores.insert(backend.id().to_string(), dims);
            }
            Err(_) => absent.push(backend.id().to_string()),
        }
    }
    if scores.is_empty() {
        return Err(EnsembleError::AllBackendsFailed(backends.len()));
    }
    Ok(MultiJudgeScores {
        sample_id: sample.id.clone(),
        scores,
        absent,
    })
}

/// Aggregate per-dimension statistics over the present backends.
///
/// Per dimension: mean; weighted mean (uniform unless weights given);
/// binary_probability = fraction of backends scoring at or above the
/// threshold; population std; agreement_rate = fraction of backend pairs
/// whose binarized flags coincide; max. Individual features are the raw
/// score and binarized flag per (backend, dimension).
pub fn aggregate_multi(
    scores: &MultiJudgeScores,
    binarize_threshold: f64,
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<AggregatedFeatures, EnsembleError> {
    let n = scores.scores.len();
    if n < 2 {
        return Err(EnsembleError::TooFewBackends(n));
    }
    let backend_ids: Vec<&String> = scores.scores.keys().collect();
    if let Some(weights) = weights {
        for id in &backend_ids {
            if !weights.contains_key(*id) {
                return Err(EnsembleError::MissingWeight((*id).clone()));
            }
        }
    }

    let mut aggregated = Vec::with_capacity(MULTI_DIMENSIONS.len() * AGGREGATE_STATS.len());
    let mut individual = Vec::with_capacity(n * MULTI_DIMENSIONS.len() * 2);

    for dimension in MULTI_DIMENSIONS {
        let values: Vec<f64> = backend_ids
            .iter()
            .map(|id| *scores.scores[*id].get(dimension).unwrap_or(&1.0))
            .collect();
        let flags: Vec<u8> = values
            .iter()
            .map(|&v| u8::from(v >= binarize_threshold))
            .collect();

        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let weighted_mean = match weights {
            None => mean,
            Some(weights) => {
                let total: f64 = backend_ids.iter().map(|id| weights[*id]).sum();
                backend_ids
                    .iter()
                    .zip(&values)
                    .map(|(id, &v)| weights[*id] * v)
                    .sum::<f64>()
                    / total
            }
        };
        let binary_probability = flags.iter().filter(|&&f| f == 1).count() as f64 / nf;
        let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf).sqrt();
        let mut agreeing = 0usize;
        let mut pairs = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                pairs += 1;
                if flags[i] == flags[j] {
                    agreeing += 1;
                }
            }
        }
        let agreement_rate = agreeing as f64 / pairs as f64;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        for (stat, value) in AGGREGATE_STATS.iter().zip([
            mean,
            weighted_mean,
            binary_probability,
            std,
            agreement_rate,
            max,
        ]) {
            aggregated.push((format!("{dimension}_{stat}"), value));
        }
        for ((id, &value), &flag) in backend_ids.iter().zip(&values).zip(&flags) {
            individual.push((format!("{id}_{dimension}_score"), value));
            individual.push((format!("{id}_{dimension}_flag"), f64::from(flag)));
        }
    }

    Ok(AggregatedFeatures {
        sample_id: scores.sample_id.clone(),
        aggregated,
        individual,
    })
}

/// Lightweight variant: one 0-1 hallucination probability from the backend
/// plus the two length statistics, sharing the textstats implementation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BinaryLogitFeatures {
    pub sample_id: String,
    pub probability: f64,
    pub response_char_len: f64,
    pub response_word_count: f64,
    #[serde(default)]
    pub clamped: bool,
    pub raw_text: String,
}

pub fn binary_logit_features(
    backend: &Backend,
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
) -> Result<BinaryLogitFeatures, EnsembleError> {
    let mut bindings = BTreeMap::new();
    bindings.insert("prompt".to_string(), sample.prompt.clone());
    bindings.insert("response".to_string(), sample.response.clone());
    let text = registry.render(TemplateId::BinaryLogit, &bindings)?;
    let reply =
        backend.complete_structured(&ChatRequest::new(text), &["hallucination_probability"])?;
    let raw = reply
        .fields
        .get("hallucination_probability")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| EnsembleError::BadField {
            field: "hallucination_probability".to_string(),
        })?;
    let probability = raw.clamp(0.0, 1.0);
    let stats = compute_text_stats(&sample.prompt, &sample.response);
    Ok(BinaryLogitFeatures {
        sample_id: sample.id.clone(),
        probability,
        response_char_len: stats.response_char_len,
        response_word_count: stats.response_word_count,
        clamped: probability != raw,
        raw_text: reply.raw_text,
    })
}
