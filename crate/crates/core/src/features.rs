//! Five-dimension feature extraction: logical consistency, entity
//! verification, factual consistency, linguistic uncertainty, and sentiment /
//! professional assessment. Each analyzer runs a prompt chain against a
//! backend, parses the structured reply, and yields named 1-10 scores; the
//! enhanced feature vector concatenates the two judge scores with the
//! registry-ordered dimensional features.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::backend::{Backend, BackendError, ChatRequest};
use crate::dataset::AnnotatedSample;
use crate::judge::JudgeScores;
use crate::prompts::{PromptError, TemplateId, TemplateRegistry};

/// Canonical ordering of the 13 dimensional features.
pub const DIMENSION_FEATURE_NAMES: [&str; 13] = [
    "contradiction_score",
    "entity_fabrication_score",
    "relationship_fabrication_score",
    "factual_consistency_score",
    "hedging_score",
    "certainty_score",
    "epistemic_score",
    "vague_score",
    "overall_uncertainty_score",
    "relevance_score",
    "emotional_tone_score",
    "communication_style_score",
    "professional_score",
];

/// Names of the two judge scores that prefix the enhanced vector.
pub const JUDGE_FEATURE_NAMES: [&str; 2] = ["hal_score", "omis_score"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    LogicalConsistency,
    EntityVerification,
    FactualConsistency,
    LinguisticUncertainty,
    SentimentProfessional,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::LogicalConsistency,
        Dimension::EntityVerification,
        Dimension::FactualConsistency,
        Dimension::LinguisticUncertainty,
        Dimension::SentimentProfessional,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Dimension::LogicalConsistency => "LC",
            Dimension::EntityVerification => "EV",
            Dimension::FactualConsistency => "FC",
            Dimension::LinguisticUncertainty => "LU",
            Dimension::SentimentProfessional => "SA",
        }
    }

    /// Which of the 13 features this analyzer produces.
    pub fn feature_names(&self) -> &'static [&'static str] {
        match self {
            Dimension::LogicalConsistency => &["contradiction_score"],
            Dimension::EntityVerification => {
                &["entity_fabrication_score", "relationship_fabrication_score"]
            }
            Dimension::FactualConsistency => &["factual_consistency_score"],
            Dimension::LinguisticUncertainty => &[
                "hedging_score",
                "certainty_score",
                "epistemic_score",
                "vague_score",
                "overall_uncertainty_score",
            ],
            Dimension::SentimentProfessional => &[
                "relevance_score",
                "emotional_tone_score",
                "communication_style_score",
                "professional_score",
            ],
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Ordered list of dimensional feature names. Dimensionality is
/// configuration, not code: the default ships the 13 nameable features and a
/// permuted or reduced registry realigns every vector without code change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRegistry {
    names: Vec<String>,
}

impl Default for FeatureRegistry {
    fn default() -> Self {
        Self {
            names: DIMENSION_FEATURE_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl FeatureRegistry {
    pub fn new(names: Vec<String>) -> Self {
        Self { names }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Statement {
    pub text: String,
    #[serde(default)]
    pub entities: Vec<String>,
    #[serde(default)]
    pub quantitative_claims: Vec<String>,
    #[serde(default)]
    pub causal: bool,
    #[serde(default)]
    pub confidence: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StatementSet {
    pub sample_id: String,
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ContradictionPair {
    pub statement_a: String,
    pub statement_b: String,
    #[serde(default)]
    pub explanation: String,
    #[serde(default)]
    pub severity: Option<f64>,
    #[serde(default)]
    pub confidence: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ContradictionReport {
    pub pairs: Vec<ContradictionPair>,
    /// g^LC on the 1-10 scale.
    pub contradiction_score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Entity {
    pub name: String,
    #[serde(default, rename = "type")]
    pub entity_type: String,
    #[serde(default)]
    pub attributes: Vec<Value>,
    #[serde(default)]
    pub source: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EntityRelationship {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub nature: String,
    #[serde(default)]
    pub qualifiers: Vec<Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EntityGraph {
    pub entities: Vec<Entity>,
    pub relationships: Vec<EntityRelationship>,
}

/// The 13 named scores from the five analyzers, all in [1, 10].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DimensionalFeatures {
    pub sample_id: String,
    pub contradiction_score: f64,
    pub entity_fabrication_score: f64,
    pub relationship_fabrication_score: f64,
    pub factual_consistency_score: f64,
    pub hedging_score: f64,
    pub certainty_score: f64,
    pub epistemic_score: f64,
    pub vague_score: f64,
    pub overall_uncertainty_score: f64,
    pub relevance_score: f64,
    pub emotional_tone_score: f64,
    pub communication_style_score: f64,
    pub professional_score: f64,
}

impl DimensionalFeatures {
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "contradiction_score" => self.contradiction_score,
            "entity_fabrication_score" => self.entity_fabrication_score,
            "relationship_fabrication_score" => self.relationship_fabrication_score,
            "factual_consistency_score" => self.factual_consistency_score,
            "hedging_score" => self.hedging_score,
            "certainty_score" => self.certainty_score,
            "epistemic_score" => self.epistemic_score,
            "vague_score" => self.vague_score,
            "overall_uncertainty_score" => self.overall_uncertainty_score,
            "relevance_score" => self.relevance_score,
            "emotional_tone_score" => self.emotional_tone_score,
            "communication_style_score" => self.communication_style_score,
            "professional_score" => self.professional_score,
            _ => return None,
        })
    }

    pub fn from_map(sample_id: &str, map: &BTreeMap<String, f64>) -> Option<Self> {
        Some(Self {
            sample_id: sample_id.to_string(),
            contradiction_score: *map.get("contradiction_score")?,
            entity_fabrication_score: *map.get("entity_fabrication_score")?,
            relationship_fabrication_score: *map.get("relationship_fabrication_score")?,
            factual_consistency_score: *map.get("factual_consistency_score")?,
            hedging_score: *map.get("hedging_score")?,
            certainty_score: *map.get("certainty_score")?,
            epistemic_score: *map.get("epistemic_score")?,
            vague_score: *map.get("vague_score")?,
            overall_uncertainty_score: *map.get("overall_uncertainty_score")?,
            relevance_score: *map.get("relevance_score")?,
            emotional_tone_score: *map.get("emotional_tone_score")?,
            communication_style_score: *map.get("communication_style_score")?,
            professional_score: *map.get("professional_score")?,
        })
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        DIMENSION_FEATURE_NAMES
            .iter()
            .map(|&name| (name.to_string(), self.get(name).expect("known name")))
            .collect()
    }
}

/// Ordered numeric vector `[hal_score, omis_score, F...]` used by classifiers.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnhancedFeatureVector {
    pub sample_id: String,
    pub feature_names: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("analyzer {dimension} stage {stage}: {detail}")]
    AnalyzerFailed {
        dimension: Dimension,
        stage: &'static str,
        detail: String,
    },
    #[error("sample {id} is invalid: {problem}")]
    InvalidSample { id: String, problem: &'static str },
    #[error("sample id mismatch: judge={judge}, features={features}")]
    IdMismatch { judge: String, features: String },
    #[error("registry names feature {0} that no analyzer produces")]
    UnknownFeature(String),
}

fn check_sample(sample: &AnnotatedSample) -> Result<(), FeatureError> {
    let invalid = |problem| FeatureError::InvalidSample {
        id: sample.id.clone(),
        problem,
    };
    if sample.prompt.trim().is_empty() {
        return Err(invalid("empty prompt"));
    }
    if sample.response.trim().is_empty() {
        return Err(invalid("empty response"));
    }
    Ok(())
}

/// Raw backend text kept for the cache, one entry per chain stage.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageRaw {
    pub stage: String,
    pub text: String,
}

/// Output of one analyzer: parsed scores plus raw stage texts and clamp flags.
#[derive(Debug, Clone)]
pub struct AnalyzerRun<T> {
    pub value: T,
    pub raw: Vec<StageRaw>,
    pub flags: Vec<String>,
}

fn clamp_range(value: f64, flags: &mut Vec<String>, field: &str) -> f64 {
    if (1.0..=10.0).contains(&value) {
        value
    } else {
        flags.push(format!("{field} clamped from {value}"));
        value.clamp(1.0, 10.0)
    }
}

fn score_field(
    fields: &serde_json::Map<String, Value>,
    name: &str,
    dimension: Dimension,
    stage: &'static str,
    flags: &mut Vec<String>,
) -> Result<f64, FeatureError> {
    let value =
        fields
            .get(name)
            .and_then(Value::as_f64)
            .ok_or_else(|| FeatureError::AnalyzerFailed {
                dimension,
                stage,
                detail: format!("field {name} missing or not numeric"),
            })?;
    Ok(clamp_range(value, flags, name))
}

fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn chain_call(
    backend: &Backend,
    registry: &TemplateRegistry,
    template: TemplateId,
    bindings: &BTreeMap<String, String>,
    required: &[&str],
    dimension: Dimension,
    stage: &'static str,
) -> Result<(serde_json::Map<String, Value>, StageRaw), FeatureError> {
    let text = registry.render(template, bindings)?;
    let reply = backend
        .complete_structured(&ChatRequest::new(text), required)
        .map_err(|e| FeatureError::AnalyzerFailed {
            dimension,
            stage,
            detail: e.to_string(),
        })?;
    Ok((
        reply.fields,
        StageRaw {
            stage: stage.to_string(),
            text: reply.raw_text,
        },
    ))
}

/// Two-stage contradiction detection: extract statements, then analyze the
/// statement set for inconsistencies. Fewer than two statements means there
/// is nothing to contradict: score 1 with no pairs.
pub fn analyze_logical_consistency(
    backend: &Backend,
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
) -> Result<AnalyzerRun<ContradictionReport>, FeatureError> {
    check_sample(sample)?;
    let dim = Dimension::LogicalConsistency;
    let mut flags = Vec::new();
    let (fields, raw1) = chain_call(
        backend,
        registry,
        TemplateId::StatementExtraction,
        &bind(&[("prompt", &sample.prompt), ("response", &sample.response)]),
        &["statements"],
        dim,
        "statement_extraction",
    )?;
    let statements: Vec<Statement> = serde_json::from_value(Value::Array(
        fields
            .get("statements")
            .and_then(Value::as_array)
            .cloned()
            .unwrap_or_default(),
    ))
    .map_err(|e| FeatureError::AnalyzerFailed {
        dimension: dim,
        stage: "statement_extraction",
        detail: format!("statements not parseable: {e}"),
    })?;

    if statements.len() < 2 {
        return Ok(AnalyzerRun {
            value: ContradictionReport {
                pairs: Vec::new(),
                contradiction_score: 1.0,
            },
            raw: vec![raw1],
            flags: vec!["fewer than 2 statements; nothing to contradict".to_string()],
        });
    }

    let statements_json = serde_json::to_string(&statements).expect("statements serialize");
    let (fields, raw2) = chain_call(
        backend,
        registry,
        TemplateId::ContradictionAnalysis,
        &bind(&[("statements", &statements_json)]),
        &["contradiction_score"],
        dim,
        "contradiction_analysis",
    )?;
    let score = score_field(
        &fields,
        "contradiction_score",
        dim,
        "contradiction_analysis",
        &mut flags,
    )?;
    let pairs: Vec<ContradictionPair> = fields
        .get("pairs")
        .and_then(Value::as_array)
        .map(|items| {
            items
                .iter()
                .filter_map(|v| serde_json::from_value(v.clone()).ok())
                .collect()
        })
        .unwrap_or_default();

    Ok(AnalyzerRun {
        value: ContradictionReport {
            pairs,
            contradiction_score: score,
        },
        raw: vec![raw1, raw2],
        flags,
    })
}

/// Entity extraction followed by plausibility verification. An empty entity
/// list short-circuits to fabrication scores of 1.
pub fn analyze_entities(
    backend: &Backend,
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
) -> Result<AnalyzerRun<(EntityGraph, f64, f64)>, FeatureError> {
    check_sample(sample)?;
    let dim = Dimension::EntityVerification;
    let mut flags = Vec::new();
    let (fields, raw1) = chain_call(
        backend,
        registry,
        TemplateId::EntityExtraction,
        &bind(&[("response", &sample.response)]),
        &["entities", "relationships"],
        dim,
        "entity_extraction",
    )?;
    let graph: EntityGraph = serde_json::from_value(Value::Object(fields)).map_err(|e| {
        FeatureError::AnalyzerFailed {
            dimension: dim,
            stage: "entity_extraction",
            detail: format!("entity graph not parseable: {e}"),
        }
    })?;

    if graph.entities.is_empty() {
        return Ok(AnalyzerRun {
            value: (graph, 1.0, 1.0),
            raw: vec![raw1],
            flags: vec!["no named entities; fabrication scores default to 1".to_string()],
        });
    }

    let entity_json = serde_json::to_string(&graph).expect("graph serializes");
    let (fields, raw2) = chain_call(
        backend,
        registry,
        TemplateId::EntityVerification,
        &bind(&[("entity_json", &entity_json)]),
        &["entity_fabrication_score", "relationship_fabrication_score"],
        dim,
        "entity_verification",
    )?;
    let entity_score = score_field(
        &fields,
        "entity_fabrication_score",
        dim,
        "entity_verification",
        &mut flags,
    )?;
    let relationship_score = score_field(
        &fields,
        "relationship_fabrication_score",
        dim,
        "entity_verification",
        &mut flags,
    )?;

    Ok(AnalyzerRun {
        value: (graph, entity_score, relationship_score),
        raw: vec![raw1, raw2],
        flags,
    })
}

/// Claim extraction plus per-claim verification. The aggregate factual
/// consistency score is the minimum per-claim accuracy: one fabricated claim
/// makes the response hallucinatory. Zero extracted claims score a flagged 10
/// (nothing to be inconsistent with).
pub fn analyze_factual(
    backend: &Backend,
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
) -> Result<AnalyzerRun<f64>, FeatureError> {
    check_sample(sample)?;
    let dim = Dimension::FactualConsistency;
    let mut flags = Vec::new();
    let (fields, raw1) = chain_call(
        backend,
        registry,
        TemplateId::ClaimExtraction,
        &bind(&[("prompt", &sample.prompt), ("response", &sample.response)]),
        &["claims"],
        dim,
        "claim_extraction",
    )?;
    let claims = fields
        .get("claims")
        .and_then(Value::as_array)
        .cloned()
        .unwrap_or_default();

    if claims.is_empty() {
        return Ok(AnalyzerRun {
            value: 10.0,
            raw: vec![raw1],
            flags: vec!["no verifiable claims".to_string()],
        });
    }

    let mut raw = vec![raw1];
    let mut min_accuracy = f64::INFINITY;
    for (i, claim) in claims.iter().enumerate() {
        let text = claim
            .get("text")
            .and_then(Value::as_str)
            .unwrap_or("unspecified claim")
            .to_string();
        let facts = claim
            .get("facts_to_verify")
            .cloned()
            .unwrap_or_else(|| Value::Array(Vec::new()));
        let facts_json = serde_json::to_string(&facts).expect("facts serialize");
        let (fields, raw_stage) = chain_call(
            backend,
            registry,
            TemplateId::ClaimVerification,
            &bind(&[("claim", &text), ("facts_to_verify", &facts_json)]),
            &["accuracy_score"],
            dim,
            "claim_verification",
        )?;
        let accuracy = score_field(
            &fields,
            "accuracy_score",
            dim,
            "claim_verification",
            &mut flags,
        )?;
        min_accuracy = min_accuracy.min(accuracy);
        raw.push(StageRaw {
            stage: format!("claim_verification[{i}]"),
            text: raw_stage.text,
        });
    }

    Ok(AnalyzerRun {
        value: min_accuracy,
        raw,
        flags,
    })
}

/// Single-chain linguistic uncertainty quantification: five scores.
pub fn analyze_uncertainty(
    backend: &Backend,
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
) -> Result<AnalyzerRun<[f64; 5]>, FeatureError> {
    check_sample(sample)?;
    let dim = Dimension::LinguisticUncertainty;
    let names = Dimension::LinguisticUncertainty.feature_names();
    let mut flags = Vec::new();
    let (fields, raw) = chain_call(
        backend,
        registry,
        TemplateId::Uncertainty,
        &bind(&[("response", &sample.response)]),
        names,
        dim,
        "uncertainty",
    )?;
    let mut scores = [0.0; 5];
    for (slot, &name) in scores.iter_mut().zip(names) {
        *slot = score_field(&fields, name, dim, "uncertainty", &mut flags)?;
    }
    Ok(AnalyzerRun {
        value: scores,
        raw: vec![raw],
        flags,
    })
}

/// Single-chain sentiment and professional assessment: four scores.
pub fn analyze_sentiment(
    backend: &Backend,
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
) -> Result<AnalyzerRun<[f64; 4]>, FeatureError> {
    check_sample(sample)?;
    let dim = Dimension::SentimentProfessional;
    let names = Dimension::SentimentProfessional.feature_names();
    let mut flags = Vec::new();
    let (fields, raw) = chain_call(
        backend,
        registry,
        TemplateId::SentimentProfessional,
        &bind(&[("prompt", &sample.prompt), ("response", &sample.response)]),
        names,
        dim,
        "sentiment_professional",
    )?;
    let mut scores = [0.0; 4];
    for (slot, &name) in scores.iter_mut().zip(names) {
        *slot = score_field(&fields, name, dim, "sentiment_professional", &mut flags)?;
    }
    Ok(AnalyzerRun {
        value: scores,
        raw: vec![raw],
        flags,
    })
}

/// Everything the five analyzers produced for one sample, including what
/// failed. A sample with failures is excluded from training; at inference the
/// missing fields are imputed from the trained model's median table.
#[derive(Debug, Clone)]
pub struct ExtractionOutcome {
    pub sample_id: String,
    pub scores: BTreeMap<String, f64>,
    pub failures: BTreeMap<String, String>,
    pub flags: Vec<String>,
    pub raw: Vec<StageRaw>,
}

impl ExtractionOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn dimensional_features(&self) -> Option<DimensionalFeatures> {
        if !self.is_complete() {
            return None;
        }
        DimensionalFeatures::from_map(&self.sample_id, &self.scores)
    }
}

type AnalyzerScores = Result<(Vec<(&'static str, f64)>, Vec<StageRaw>, Vec<String>), FeatureError>;

/// Run all five analyzers for one sample. Partial failures are recorded per
/// dimension rather than aborting the whole sample.
pub fn extract_all(
    backend: &Backend,
    registry: &TemplateRegistry,
    sample: &AnnotatedSample,
) -> ExtractionOutcome {
    let mut outcome = ExtractionOutcome {
        sample_id: sample.id.clone(),
        scores: BTreeMap::new(),
        failures: BTreeMap::new(),
        flags: Vec::new(),
        raw: Vec::new(),
    };

    let absorb =
        |dim: Dimension, outcome: &mut ExtractionOutcome, result: AnalyzerScores| match result {
            Ok((scores, raw, flags)) => {
                for (name, value) in scores {
                    outcome.scores.insert(name.to_string(), value);
                }
                outcome.raw.extend(raw);
                outcome.flags.extend(flags);
            }
            Err(e) => {
                outcome
                    .failures
                    .insert(dim.key().to_string(), e.to_string());
            }
        };

    absorb(
        Dimension::LogicalConsistency,
        &mut outcome,
        analyze_logical_consistency(backend, registry, sample).map(|run| {
            (
                vec![("contradiction_score", run.value.contradiction_score)],
                run.raw,
                run.flags,
            )
        }),
    );
    absorb(
        Dimension::EntityVerification,
        &mut outcome,
        analyze_entities(backend, registry, sample).map(|run| {
            (
                vec![
                    ("entity_fabrication_score", run.value.1),
                    ("relationship_fabrication_score", run.value.2),
                ],
                run.raw,
                run.flags,
            )
        }),
    );
    absorb(
        Dimension::FactualConsistency,
        &mut outcome,
        analyze_factual(backend, registry, sample).map(|run| {
            (
                vec![("factual_consistency_score", run.value)],
                run.raw,
                run.flags,
            )
        }),
    );
    absorb(
        Dimension::LinguisticUncertainty,
        &mut outcome,
        analyze_uncertainty(backend, registry, sample).map(|run| {
            let names = Dimension::LinguisticUncertainty.feature_names();
            (
                names.iter().copied().zip(run.value).collect(),
                run.raw,
                run.flags,
            )
        }),
    );
    absorb(
        Dimension::SentimentProfessional,
        &mut outcome,
        analyze_sentiment(backend, registry, sample).map(|run| {
            let names = Dimension::SentimentProfessional.feature_names();
            (
                names.iter().copied().zip(run.value).collect(),
                run.raw,
                run.flags,
            )
        }),
    );

    outcome
}

/// Concatenate the judge scores with registry-ordered dimensional features.
pub fn assemble_vector(
    judge: &JudgeScores,
    features: &DimensionalFeatures,
    registry: &FeatureRegistry,
) -> Result<EnhancedFeatureVector, FeatureError> {
    if judge.sample_id != features.sample_id {
        return Err(FeatureError::IdMismatch {
            judge: judge.sample_id.clone(),
            features: features.sample_id.clone(),
        });
    }
    let mut names: Vec<String> = JUDGE_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut values = vec![f64::from(judge.hal_score), f64::from(judge.omis_score)];
    for name in registry.names() {
        let value = features
            .get(name)
            .ok_or_else(|| FeatureError::UnknownFeature(name.clone()))?;
        names.push(name.clone());
        values.push(value);
    }
    Ok(EnhancedFeatureVector {
        sample_id: judge.sample_id.clone(),
        feature_names: names,
        values,
    })
}
