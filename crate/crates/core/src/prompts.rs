//! Prompt template registry.
//!
//! Template bodies live as versioned text assets under `assets/prompts/` and
//! are embedded at compile time. Each template declares an anchor phrase and
//! an output schema; the registry refuses to construct if any anchor is
//! missing from its body, so an accidental edit to an asset fails fast.
//! Rendering substitutes `{placeholder}` tokens and appends a uniform
//! structured-output suffix derived from the schema. The body text above the
//! suffix is never modified.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Task;

/// Version tag recorded in caches and reports so stale extractions are
/// detectable when templates change.
pub const TEMPLATE_VERSION: &str = "templates-v1";

/// Instruction appended when a backend returned output the structured parser
/// could not use and we ask once more.
pub const REASK_INSTRUCTION: &str =
    "Your previous reply could not be parsed. Return only the structured JSON object, with no other text.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Judge,
    StatementExtraction,
    ContradictionAnalysis,
    EntityExtraction,
    EntityVerification,
    ClaimExtraction,
    ClaimVerification,
    Uncertainty,
    SentimentProfessional,
    MultiLlmJudge,
    BinaryLogit,
}

impl TemplateId {
    pub const ALL: [TemplateId; 11] = [
        TemplateId::Judge,
        TemplateId::StatementExtraction,
        TemplateId::ContradictionAnalysis,
        TemplateId::EntityExtraction,
        TemplateId::EntityVerification,
        TemplateId::ClaimExtraction,
        TemplateId::ClaimVerification,
        TemplateId::Uncertainty,
        TemplateId::SentimentProfessional,
        TemplateId::MultiLlmJudge,
        TemplateId::BinaryLogit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TemplateId::Judge => "judge",
            TemplateId::StatementExtraction => "statement_extraction",
            TemplateId::ContradictionAnalysis => "contradiction_analysis",
            TemplateId::EntityExtraction => "entity_extraction",
            TemplateId::EntityVerification => "entity_verification",
            TemplateId::ClaimExtraction => "claim_extraction",
            TemplateId::ClaimVerification => "claim_verification",
            TemplateId::Uncertainty => "uncertainty",
            TemplateId::SentimentProfessional => "sentiment_professional",
            TemplateId::MultiLlmJudge => "multi_llm_judge",
            TemplateId::BinaryLogit => "binary_logit",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What kind of value a schema field carries, for suffix wording and
/// downstream parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Integer-or-real score on the 1-10 scale.
    Score,
    /// Real probability in [0, 1].
    Probability,
    /// JSON array.
    Array,
    /// Free-form text.
    Text,
    /// Array of free-form strings.
    TextList,
}

#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub name: &'static str,
    pub kind: FieldKind,
    pub required: bool,
    /// Short human wording used in the output-format suffix.
    pub describe: &'static str,
}

impl FieldSpec {
    const fn req(name: &'static str, kind: FieldKind, describe: &'static str) -> Self {
        Self {
            name,
            kind,
            required: true,
            describe,
        }
    }

    const fn opt(name: &'static str, kind: FieldKind, describe: &'static str) -> Self {
        Self {
            name,
            kind,
            required: false,
            describe,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: &'static str,
    pub anchor: &'static str,
    pub output_schema: Vec<FieldSpec>,
}

impl PromptTemplate {
    /// Placeholder names appearing in the body, in order of first appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for name in scan_placeholders(self.body) {
            if !seen.contains(&name) {
                seen.push(name);
            }
        }
        seen
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("template {template}: placeholder {{{placeholder}}} is not bound")]
    UnboundPlaceholder {
        template: TemplateId,
        placeholder: String,
    },
    #[error("template {template}: anchor phrase missing from body asset")]
    MissingAnchor { template: TemplateId },
    #[error("template {template}: duplicate output field {field}")]
    DuplicateField {
        template: TemplateId,
        field: &'static str,
    },
    #[error("few-shot k must be one of 0, 2, 4, 6, 8; got {0}")]
    BadFewShotK(usize),
    #[error("need {need} {class} exemplars for k={k}, have {have}")]
    InsufficientExemplars {
        k: usize,
        class: &'static str,
        need: usize,
        have: usize,
    },
}

/// A labeled worked example for few-shot prompt assembly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FewShotExemplar {
    pub prompt: String,
    pub response: String,
    pub label: u8,
    pub task: Task,
}

/// Immutable registry of all templates. Construct once and share freely.
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: BTreeMap<TemplateId, PromptTemplate>,
}

impl TemplateRegistry {
    pub fn new() -> Result<Self, PromptError> {
        let mut templates = BTreeMap::new();
        for template in builtin_templates() {
            if !template.body.contains(template.anchor) {
                return Err(PromptError::MissingAnchor {
                    template: template.id,
                });
            }
            let mut names = std::collections::BTreeSet::new();
            for field in &template.output_schema {
                if !names.insert(field.name) {
                    return Err(PromptError::DuplicateField {
                        template: template.id,
                        field: field.name,
                    });
                }
            }
            templates.insert(template.id, template);
        }
        Ok(Self { templates })
    }

    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        &self.templates[&id]
    }

    pub fn version(&self) -> &'static str {
        TEMPLATE_VERSION
    }

    /// Substitute placeholders and append the structured-output suffix.
    pub fn render(
        &self,
        id: TemplateId,
        bindings: &BTreeMap<String, String>,
    ) -> Result<String, PromptError> {
        let template = self.get(id);
        let mut rendered = substitute(template.body, bindings).map_err(|placeholder| {
            PromptError::UnboundPlaceholder {
                template: id,
                placeholder,
            }
        })?;
        rendered.push_str(&output_format_suffix(&template.output_schema));
        Ok(rendered)
    }

    /// Prepend `k` worked examples before the rendered query. `k = 0` is
    /// exactly `render`. Exemplars are taken class-balanced (k/2 positive,
    /// k/2 negative) in their given order.
    pub fn assemble_few_shot(
        &self,
        id: TemplateId,
        bindings: &BTreeMap<String, String>,
        exemplars: &[FewShotExemplar],
        k: usize,
    ) -> Result<String, PromptError> {
        if !matches!(k, 0 | 2 | 4 | 6 | 8) {
            return Err(PromptError::BadFewShotK(k));
        }
        let rendered = self.render(id, bindings)?;
        if k == 0 {
            return Ok(rendered);
        }

        let per_class = k / 2;
        let positives: Vec<&FewShotExemplar> = exemplars.iter().filter(|e| e.label == 1).collect();
        let negatives: Vec<&FewShotExemplar> = exemplars.iter().filter(|e| e.label == 0).collect();
        if positives.len() < per_class {
            return Err(PromptError::InsufficientExemplars {
                k,
                class: "positive",
                need: per_class,
                have: positives.len(),
            });
        }
        if negatives.len() < per_class {
            return Err(PromptError::InsufficientExemplars {
                k,
                class: "negative",
                need: per_class,
                have: negatives.len(),
            });
        }

        let mut out = String::new();
        out.push_str(&format!(
            "Here are {k} worked examples with expert consensus labels.\n\n"
        ));
        for i in 0..per_class {
            for exemplar in [positives[i], negatives[i]] {
                let idx = out.matches("Example ").count() + 1;
                out.push_str(&format_exemplar(idx, exemplar));
            }
        }
        out.push_str("Now evaluate the new conversation below.\n\n");
        out.push_str(&rendered);
        Ok(out)
    }
}

fn format_exemplar(index: usize, exemplar: &FewShotExemplar) -> String {
    let (noun, verb) = match exemplar.task {
        Task::Hallucination => ("hallucination", "contain"),
        Task::Omission => ("omission", "contain"),
    };
    let polarity = if exemplar.label == 1 {
        "does"
    } else {
        "does not"
    };
    // Fixed one-sentence rationale template; deterministic by design.
    format!(
        "Example {index}:\nOriginal Prompt: \"{}\"\nLLM Response: \"{}\"\nExpert label ({noun}): {}\nRationale: Expert annotators reached unanimous consensus that this response {polarity} {verb} a {noun}.\n\n",
        exemplar.prompt, exemplar.response, exemplar.label
    )
}

/// Scan `{word}` tokens where word is a lowercase identifier. Literal braces
/// around anything else are left untouched.
fn scan_placeholders(body: &str) -> Vec<String> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(end) = body[i + 1..].find('}') {
                let candidate = &body[i + 1..i + 1 + end];
                if !candidate.is_empty()
                    && candidate
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c == '_')
                {
                    out.push(candidate.to_string());
                    i += end + 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

fn substitute(body: &str, bindings: &BTreeMap<String, String>) -> Result<String, String> {
    let mut out = String::with_capacity(body.len());
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(end) = body[i + 1..].find('}') {
                let candidate = &body[i + 1..i + 1 + end];
                if !candidate.is_empty()
                    && candidate
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c == '_')
                {
                    let value = bindings
                        .get(candidate)
                        .ok_or_else(|| candidate.to_string())?;
                    out.push_str(value);
                    i += end + 2;
                    continue;
                }
            }
        }
        // Safe: we only land here on byte boundaries of ASCII '{' checks.
        let ch_len = body[i..].chars().next().map(char::len_utf8).unwrap_or(1);
        out.push_str(&body[i..i + ch_len]);
        i += ch_len;
    }
    Ok(out)
}

fn output_format_suffix(schema: &[FieldSpec]) -> String {
    let mut required = Vec::new();
    let mut optional = Vec::new();
    for field in schema {
        let entry = format!("{} ({})", field.name, field.describe);
        if field.required {
            required.push(entry);
        } else {
            optional.push(entry);
        }
    }
    let mut out = String::from(
        "\n\nReturn your answer as exactly one JSON object and nothing else. Required fields: ",
    );
    out.push_str(&required.join("; "));
    out.push('.');
    if !optional.is_empty() {
        out.push_str(" Optional fields: ");
        out.push_str(&optional.join("; "));
        out.push('.');
    }
    out
}

fn builtin_templates() -> Vec<PromptTemplate> {
    use FieldKind::*;
    vec![
        PromptTemplate {
            id: TemplateId::Judge,
            body: include_str!("../assets/prompts/judge.txt"),
            anchor: "Analyze the following LLM conversation for both hallucinations and omissions",
            output_schema: vec![
                FieldSpec::req("hal_score", Score, "integer hallucination score, 1-10"),
                FieldSpec::req("omis_score", Score, "integer omission score, 1-10"),
                FieldSpec::opt("assessment", Text, "overall reasoning"),
                FieldSpec::opt("hallucinated_content", TextList, "identified hallucinated content"),
                FieldSpec::opt("omitted_content", TextList, "identified omitted content"),
                FieldSpec::opt("explanations", TextList, "explanation per identified issue"),
                FieldSpec::opt("confidence", Text, "your confidence level"),
                FieldSpec::opt("categories", TextList, "categories of hallucination and omission detected"),
            ],
        },
        PromptTemplate {
            id: TemplateId::StatementExtraction,
            body: include_str!("../assets/prompts/statement_extraction.txt"),
            anchor: "Extract key factual statements and logical assertions",
            output_schema: vec![FieldSpec::req(
                "statements",
                Array,
                "array of objects with fields text, entities, quantitative_claims, causal, confidence",
            )],
        },
        PromptTemplate {
            id: TemplateId::ContradictionAnalysis,
            body: include_str!("../assets/prompts/contradiction_analysis.txt"),
            anchor: "identify any contradictions, inconsistencies, or logical incompatibilities",
            output_schema: vec![
                FieldSpec::req(
                    "pairs",
                    Array,
                    "array of objects with fields statement_a, statement_b, explanation, severity, confidence",
                ),
                FieldSpec::req("contradiction_score", Score, "overall logical inconsistency, 1-10"),
            ],
        },
        PromptTemplate {
            id: TemplateId::EntityExtraction,
            body: include_str!("../assets/prompts/entity_extraction.txt"),
            anchor: "Extract all named entities and their relationships",
            output_schema: vec![
                FieldSpec::req(
                    "entities",
                    Array,
                    "array of objects with fields name, type, attributes, source",
                ),
                FieldSpec::req(
                    "relationships",
                    Array,
                    "array of objects with fields from, to, nature, qualifiers",
                ),
            ],
        },
        PromptTemplate {
            id: TemplateId::EntityVerification,
            body: include_str!("../assets/prompts/entity_verification.txt"),
            anchor: "Verify the plausibility of the following entities",
            output_schema: vec![
                FieldSpec::req("entity_fabrication_score", Score, "overall entity fabrication, 1-10"),
                FieldSpec::req(
                    "relationship_fabrication_score",
                    Score,
                    "overall relationship fabrication, 1-10",
                ),
                FieldSpec::opt("assessments", Array, "per-entity and per-relationship assessments"),
            ],
        },
        PromptTemplate {
            id: TemplateId::ClaimExtraction,
            body: include_str!("../assets/prompts/claim_extraction.txt"),
            anchor: "Extract verifiable factual claims",
            output_schema: vec![FieldSpec::req(
                "claims",
                Array,
                "array of objects with fields text, claim_type, facts_to_verify, verifiability, sources",
            )],
        },
        PromptTemplate {
            id: TemplateId::ClaimVerification,
            body: include_str!("../assets/prompts/claim_verification.txt"),
            anchor: "Evaluate the factual accuracy of the following claim",
            output_schema: vec![
                FieldSpec::req("accuracy_score", Score, "overall claim accuracy, 1-10"),
                FieldSpec::opt("explanation", Text, "reasoning"),
                FieldSpec::opt("confidence", Text, "confidence level"),
            ],
        },
        PromptTemplate {
            id: TemplateId::Uncertainty,
            body: include_str!("../assets/prompts/uncertainty.txt"),
            anchor: "linguistic markers of uncertainty and certainty",
            output_schema: vec![
                FieldSpec::req("hedging_score", Score, "hedging language, 1-10"),
                FieldSpec::req("certainty_score", Score, "certainty markers, 1-10"),
                FieldSpec::req("epistemic_score", Score, "epistemic stance, 1-10"),
                FieldSpec::req("vague_score", Score, "vague or imprecise language, 1-10"),
                FieldSpec::req("overall_uncertainty_score", Score, "overall uncertainty, 1-10"),
                FieldSpec::opt("examples", Array, "example phrases per category"),
            ],
        },
        PromptTemplate {
            id: TemplateId::SentimentProfessional,
            body: include_str!("../assets/prompts/sentiment_professional.txt"),
            anchor: "various emotional and quality aspects",
            output_schema: vec![
                FieldSpec::req("relevance_score", Score, "relevance and quality, 1-10"),
                FieldSpec::req("emotional_tone_score", Score, "emotional tone, 1-10"),
                FieldSpec::req("communication_style_score", Score, "communication style, 1-10"),
                FieldSpec::req("professional_score", Score, "professional appropriateness, 1-10"),
                FieldSpec::opt("explanations", Array, "explanation per criterion"),
            ],
        },
        PromptTemplate {
            id: TemplateId::MultiLlmJudge,
            body: include_str!("../assets/prompts/multi_llm_judge.txt"),
            anchor: "independently score the response across six dimensions",
            output_schema: vec![
                FieldSpec::req("hallucination_score", Score, "hallucination, 1-10"),
                FieldSpec::req("omission_score", Score, "omission, 1-10"),
                FieldSpec::req("therapist_impersonation_score", Score, "therapist impersonation, 1-10"),
                FieldSpec::req("human_likeness_score", Score, "human-likeness, 1-10"),
                FieldSpec::req("contradiction_score", Score, "internal contradiction, 1-10"),
                FieldSpec::req("relevance_score", Score, "relevance, 1-10"),
            ],
        },
        PromptTemplate {
            id: TemplateId::BinaryLogit,
            body: include_str!("../assets/prompts/binary_logit.txt"),
            anchor: "single hallucination probability on a 0-1 scale",
            output_schema: vec![FieldSpec::req(
                "hallucination_probability",
                Probability,
                "real number in [0, 1]",
            )],
        },
    ]
}
