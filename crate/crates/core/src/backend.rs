//! Uniform access to chat-style LLM backends.
//!
//! Two kinds: a generic HTTP chat-completion backend (OpenAI-style messages
//! schema, bearer auth from a named environment variable, retries with
//! exponential backoff) and a deterministic mock.
//!
//! The mock is a pure function of `(mock_seed, user_text)`. It recognizes
//! which template produced the prompt via the registry anchor phrases and
//! replies with a structured object whose fields are seeded hashes — unless
//! the text embeds `[[mock: field=value, ...]]` directives, in which case the
//! directive values win. Directives are echoed into stage-one outputs
//! (statement texts, entity attributes, claim facts) so that multi-stage
//! analyzer chains keep seeing them. This is what test fixtures and the
//! synthetic generator use to drive exact values through the full pipeline.
//!
//! Special directives: `mock_malformed=1` makes the first reply unparseable
//! (the re-ask succeeds); `mock_malformed=2` makes every reply unparseable.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex, OnceLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::prompts::{TemplateId, TemplateRegistry, REASK_INSTRUCTION};
use crate::rng::{fnv1a, hash_score, mix_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    Mock,
}

/// Configuration for one backend. Model differences live entirely here; the
/// calling code is model-agnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub id: String,
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_seed: Option<u64>,
    /// Per-backend concurrency cap for in-flight requests.
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
}

fn default_max_retries() -> u32 {
    2
}

fn default_timeout_s() -> u64 {
    60
}

fn default_max_in_flight() -> usize {
    4
}

impl BackendConfig {
    pub fn mock(id: &str, seed: u64) -> Self {
        Self {
            id: id.to_string(),
            kind: BackendKind::Mock,
            endpoint: None,
            model_name: None,
            auth_env: None,
            max_retries: default_max_retries(),
            timeout_s: default_timeout_s(),
            mock_seed: Some(seed),
            max_in_flight: default_max_in_flight(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatRequest {
    /// Temperature defaults to 0.0 for reproducibility.
    pub fn new(user_text: impl Into<String>) -> Self {
        Self {
            system_text: String::new(),
            user_text: user_text.into(),
            temperature: 0.0,
            max_output_tokens: 2048,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub latency_ms: u64,
    pub backend_id: String,
    pub attempt_count: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("no structured block found in backend output")]
    NoStructuredBlock,
    #[error("structured block starting at byte {offset} is malformed")]
    MalformedBlock { offset: usize },
    #[error("structured block is missing required field {field}")]
    MissingField { field: String },
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("backend {backend}: auth environment variable {env} is not set")]
    AuthMissing { backend: String, env: String },
    #[error("backend {backend}: request timed out")]
    Timeout { backend: String },
    #[error("backend {backend}: retries exhausted after {attempts} attempts: {last}")]
    ExhaustedRetries {
        backend: String,
        attempts: u32,
        last: String,
    },
    #[error("backend {backend}: malformed reply: {detail}")]
    MalformedBackendReply { backend: String, detail: String },
    #[error("backend {backend}: HTTP {status}: {body}")]
    Http {
        backend: String,
        status: u16,
        body: String,
    },
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend {backend}: structured output unusable{} : {source}", if *.reasked { " even after re-ask" } else { "" })]
    StructuredOutput {
        backend: String,
        reasked: bool,
        #[source]
        source: ParseError,
    },
}

/// Parsed structured reply plus the raw text it came from.
#[derive(Debug, Clone)]
pub struct StructuredReply {
    pub fields: Map<String, Value>,
    pub raw_text: String,
    pub reasked: bool,
}

struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.cv.wait(permits).unwrap();
        }
        *permits -= 1;
    }

    fn release(&self) {
        *self.permits.lock().unwrap() += 1;
        self.cv.notify_one();
    }
}

/// A configured backend handle. Cheap to share behind an `Arc`; the call
/// counter makes cache-hit behavior observable in tests.
pub struct Backend {
    config: BackendConfig,
    limiter: Semaphore,
    calls: AtomicU64,
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backend")
            .field("id", &self.config.id)
            .field("kind", &self.config.kind)
            .finish()
    }
}

impl Backend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        match config.kind {
            BackendKind::HttpChat => {
                if config.endpoint.is_none() || config.model_name.is_none() {
                    return Err(BackendError::InvalidConfig(format!(
                        "http_chat backend {} requires endpoint and model_name",
                        config.id
                    )));
                }
            }
            BackendKind::Mock => {
                if config.mock_seed.is_none() {
                    return Err(BackendError::InvalidConfig(format!(
                        "mock backend {} requires mock_seed",
                        config.id
                    )));
                }
            }
        }
        let limiter = Semaphore::new(config.max_in_flight);
        Ok(Self {
            config,
            limiter,
            calls: AtomicU64::new(0),
        })
    }

    pub fn mock(id: &str, seed: u64) -> Self {
        Self::new(BackendConfig::mock(id, seed)).expect("mock config is valid")
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// Number of completions issued so far (includes mock calls).
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Verify credentials are present without any network traffic. Batch
    /// drivers call this before processing so a missing key fails fast.
    pub fn check_credentials(&self) -> Result<(), BackendError> {
        if self.config.kind == BackendKind::HttpChat {
            if let Some(env_name) = &self.config.auth_env {
                if std::env::var(env_name).is_err() {
                    return Err(BackendError::AuthMissing {
                        backend: self.config.id.clone(),
                        env: env_name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Issue one chat completion. Transient HTTP failures are retried with
    /// exponential backoff up to `max_retries`; the mock never fails.
    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        if request.user_text.trim().is_empty() {
            return Err(BackendError::InvalidRequest("empty user_text".into()));
        }
        match self.config.kind {
            BackendKind::Mock => {
                self.calls.fetch_add(1, Ordering::Relaxed);
                let seed = self.config.mock_seed.expect("validated");
                Ok(ChatResponse {
                    text: mock_reply(seed, &request.user_text),
                    latency_ms: 0,
                    backend_id: self.config.id.clone(),
                    attempt_count: 1,
                })
            }
            BackendKind::HttpChat => self.complete_http(request),
        }
    }

    /// Completion plus structured-block extraction with the bounded re-ask:
    /// if the first reply has no usable object (or lacks a required field),
    /// ask once more with an appended return-only-the-object instruction.
    pub fn complete_structured(
        &self,
        request: &ChatRequest,
        required_fields: &[&str],
    ) -> Result<StructuredReply, BackendError> {
        let first = self.complete(request)?;
        match extract_with_required(&first.text, required_fields) {
            Ok(fields) => Ok(StructuredReply {
                fields,
                raw_text: first.text,
                reasked: false,
            }),
            Err(_) => {
                let mut retry = request.clone();
                retry.user_text = format!("{}\n\n{}", request.user_text, REASK_INSTRUCTION);
                let second = self.complete(&retry)?;
                match extract_with_required(&second.text, required_fields) {
                    Ok(fields) => Ok(StructuredReply {
                        fields,
                        raw_text: second.text,
                        reasked: true,
                    }),
                    Err(source) => Err(BackendError::StructuredOutput {
                        backend: self.config.id.clone(),
                        reasked: true,
                        source,
                    }),
                }
            }
        }
    }

    fn complete_http(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let config = &self.config;
        // Credentials are checked before any network traffic.
        let token = match &config.auth_env {
            Some(env_name) => {
                Some(
                    std::env::var(env_name).map_err(|_| BackendError::AuthMissing {
                        backend: config.id.clone(),
                        env: env_name.clone(),
                    })?,
                )
            }
            None => None,
        };
        let endpoint = config.endpoint.as_deref().expect("validated");
        let model = config.model_name.as_deref().expect("validated");
        let body = json!({
            "model": model,
            "messages": chat_messages(request),
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });

        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();

        let started = Instant::now();
        let mut last_failure = String::new();
        for attempt in 0..=config.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(250 * (1 << (attempt - 1).min(6))));
            }
            self.limiter.acquire();
            let outcome = {
                let mut call = agent.post(endpoint);
                if let Some(token) = &token {
                    call = call.header("Authorization", &format!("Bearer {token}"));
                }
                call.send_json(&body)
            };
            self.limiter.release();
            self.calls.fetch_add(1, Ordering::Relaxed);

            match outcome {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (200..300).contains(&status) {
                        let value: Value = resp.body_mut().read_json().map_err(|e| {
                            BackendError::MalformedBackendReply {
                                backend: config.id.clone(),
                                detail: format!("body is not JSON: {e}"),
                            }
                        })?;
                        let text = reply_text(&value).ok_or_else(|| {
                            BackendError::MalformedBackendReply {
                                backend: config.id.clone(),
                                detail: "no choices[0].message.content".into(),
                            }
                        })?;
                        return Ok(ChatResponse {
                            text,
                            latency_ms: started.elapsed().as_millis() as u64,
                            backend_id: config.id.clone(),
                            attempt_count: attempt + 1,
                        });
                    }
                    let body_text = resp
                        .body_mut()
                        .read_to_string()
                        .unwrap_or_else(|_| String::from("<unreadable>"));
                    if status == 429 || (500..600).contains(&status) {
                        last_failure = format!("HTTP {status}");
                        continue;
                    }
                    return Err(BackendError::Http {
                        backend: config.id.clone(),
                        status,
                        body: truncate(&body_text, 300),
                    });
                }
                Err(err) => {
                    let is_timeout = matches!(err, ureq::Error::Timeout(_));
                    if is_timeout && config.max_retries == 0 {
                        return Err(BackendError::Timeout {
                            backend: config.id.clone(),
                        });
                    }
                    last_failure = err.to_string();
                    continue;
                }
            }
        }
        Err(BackendError::ExhaustedRetries {
            backend: config.id.clone(),
            attempts: config.max_retries + 1,
            last: last_failure,
        })
    }
}

fn chat_messages(request: &ChatRequest) -> Value {
    let mut messages = Vec::new();
    if !request.system_text.is_empty() {
        messages.push(json!({"role": "system", "content": request.system_text}));
    }
    messages.push(json!({"role": "user", "content": request.user_text}));
    Value::Array(messages)
}

fn reply_text(value: &Value) -> Option<String> {
    value
        .get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

fn truncate(s: &str, max: usize) -> String {
    if s.len() <= max {
        s.to_string()
    } else {
        let mut end = max;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &s[..end])
    }
}

/// Find the first well-formed JSON object embedded in `text`, tolerating code
/// fences, leading prose, and trailing junk. Total on arbitrary input: either
/// a field map or a typed error, never a panic.
pub fn extract_structured_block(text: &str) -> Result<Map<String, Value>, ParseError> {
    let bytes = text.as_bytes();
    let mut first_open: Option<usize> = None;
    let mut start = 0;
    while let Some(open_rel) = text[start..].find('{') {
        let open = start + open_rel;
        if first_open.is_none() {
            first_open = Some(open);
        }
        if let Some(close) = matching_close(bytes, open) {
            let candidate = &text[open..=close];
            if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(candidate) {
                return Ok(map);
            }
        }
        start = open + 1;
    }
    match first_open {
        Some(offset) => Err(ParseError::MalformedBlock { offset }),
        None => Err(ParseError::NoStructuredBlock),
    }
}

/// Byte index of the brace closing the object opened at `open`, skipping
/// string literals and escapes. ASCII scanning is UTF-8 safe here because
/// multi-byte sequences never contain ASCII bytes.
fn matching_close(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn extract_with_required(
    text: &str,
    required_fields: &[&str],
) -> Result<Map<String, Value>, ParseError> {
    let fields = extract_structured_block(text)?;
    for &name in required_fields {
        if !fields.contains_key(name) {
            return Err(ParseError::MissingField {
                field: name.to_string(),
            });
        }
    }
    Ok(fields)
}

/// Deterministic per-field integers in 1..=10 keyed by (mock_seed, sample_id,
/// field name). Test double for fabricating analyzer outputs directly.
pub fn mock_score_profile(
    config: &BackendConfig,
    sample_id: &str,
    field_names: &[&str],
) -> BTreeMap<String, i64> {
    let seed = config.mock_seed.unwrap_or(0);
    field_names
        .iter()
        .map(|&f| (f.to_string(), hash_score(seed, sample_id, f)))
        .collect()
}

// ---------------------------------------------------------------------------
// Mock reply synthesis
// ---------------------------------------------------------------------------

/// Parse every `[[mock: key=value, ...]]` span in the text. Later spans
/// override earlier ones.
pub fn parse_mock_directives(text: &str) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let mut start = 0;
    while let Some(open_rel) = text[start..].find("[[mock:") {
        let open = start + open_rel + "[[mock:".len();
        let Some(close_rel) = text[open..].find("]]") else {
            break;
        };
        let inner = &text[open..open + close_rel];
        for pair in inner.split([',', ';']) {
            let mut parts = pair.splitn(2, '=');
            let (Some(key), Some(value)) = (parts.next(), parts.next()) else {
                continue;
            };
            let key = key.trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            {
                continue;
            }
            if let Ok(v) = value.trim().parse::<f64>() {
                out.insert(key.to_string(), v);
            }
        }
        start = open + close_rel + 2;
    }
    out
}

/// Canonical re-encoding of directives, echoed into stage-one outputs so
/// downstream prompt chains keep carrying them.
fn encode_directives(directives: &BTreeMap<String, f64>) -> String {
    let body: Vec<String> = directives.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("[[mock: {}]]", body.join(", "))
}

fn registry() -> &'static TemplateRegistry {
    static REGISTRY: OnceLock<TemplateRegistry> = OnceLock::new();
    REGISTRY.get_or_init(|| TemplateRegistry::new().expect("builtin templates are valid"))
}

fn detect_template(user_text: &str) -> Option<TemplateId> {
    TemplateId::ALL
        .into_iter()
        .find(|&id| user_text.contains(registry().get(id).anchor))
}

fn directive_or_score(
    directives: &BTreeMap<String, f64>,
    key: &str,
    seed: u64,
    user_text: &str,
    field: &str,
) -> Value {
    match directives.get(key) {
        Some(&v) => number(v),
        None => Value::from(hash_score(seed, user_text, field)),
    }
}

fn number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < i64::MAX as f64 {
        Value::from(v as i64)
    } else {
        Value::from(v)
    }
}

fn count_directive(
    directives: &BTreeMap<String, f64>,
    key: &str,
    default: usize,
    max: usize,
) -> usize {
    directives
        .get(key)
        .map(|&v| (v.max(0.0) as usize).min(max))
        .unwrap_or(default)
}

/// Deterministic mock completion: a short prose line plus a fenced JSON
/// object matching the detected template's schema.
pub fn mock_reply(seed: u64, user_text: &str) -> String {
    let directives = parse_mock_directives(user_text);
    let reasked = user_text.contains(REASK_INSTRUCTION);
    if let Some(&m) = directives.get("mock_malformed") {
        if m >= 2.0 || (m >= 1.0 && !reasked) {
            return "The response looks reasonable overall; nothing structured to add.".to_string();
        }
    }
    let echo = if directives.is_empty() {
        None
    } else {
        Some(encode_directives(&directives))
    };
    let fields = match detect_template(user_text) {
        Some(TemplateId::Judge) => mock_scores(
            seed,
            user_text,
            &directives,
            &[("hal_score", "hal_score"), ("omis_score", "omis_score")],
            &[
                ("assessment", json!("Deterministic mock assessment.")),
                ("confidence", json!("medium")),
                ("categories", json!([])),
            ],
        ),
        Some(TemplateId::StatementExtraction) => {
            let salt = hash_score(seed, user_text, "stmt_count") as usize;
            let n = count_directive(&directives, "stmt_count", 5 + salt % 6, 15);
            let statements: Vec<Value> = (0..n)
                .map(|i| {
                    let mut text = format!("The response asserts point {} about the topic.", i + 1);
                    if i == 0 {
                        if let Some(echo) = &echo {
                            text.push(' ');
                            text.push_str(echo);
                        }
                    }
                    json!({
                        "text": text,
                        "entities": [],
                        "quantitative_claims": [],
                        "causal": false,
                        "confidence": "medium",
                    })
                })
                .collect();
            let mut map = Map::new();
            map.insert("statements".into(), Value::Array(statements));
            map
        }
        Some(TemplateId::ContradictionAnalysis) => {
            let n = count_directive(&directives, "contradiction_pairs", 0, 8);
            let score = directive_or_score(
                &directives,
                "contradiction_score",
                seed,
                user_text,
                "contradiction_score",
            );
            let pairs: Vec<Value> = (0..n)
                .map(|i| {
                    json!({
                        "statement_a": format!("statement {}", 2 * i + 1),
                        "statement_b": format!("statement {}", 2 * i + 2),
                        "explanation": "the two assertions cannot both hold",
                        "severity": score,
                        "confidence": "medium",
                    })
                })
                .collect();
            let mut map = Map::new();
            map.insert("pairs".into(), Value::Array(pairs));
            map.insert("contradiction_score".into(), score);
            map
        }
        Some(TemplateId::EntityExtraction) => {
            let salt = hash_score(seed, user_text, "entity_count") as usize;
            let n = count_directive(&directives, "entity_count", salt % 4, 10);
            let entities: Vec<Value> = (0..n)
                .map(|i| {
                    let mut attributes: Vec<Value> = vec![json!("mentioned in response")];
                    if i == 0 {
                        if let Some(echo) = &echo {
                            attributes.push(Value::String(echo.clone()));
                        }
                    }
                    json!({
                        "name": format!("Entity {}", i + 1),
                        "type": "concept",
                        "attributes": attributes,
                        "source": Value::Null,
                    })
                })
                .collect();
            let relationships: Vec<Value> = if n >= 2 {
                vec![json!({
                    "from": "Entity 1",
                    "to": "Entity 2",
                    "nature": "related",
                    "qualifiers": [],
                })]
            } else {
                Vec::new()
            };
            let mut map = Map::new();
            map.insert("entities".into(), Value::Array(entities));
            map.insert("relationships".into(), Value::Array(relationships));
            map
        }
        Some(TemplateId::EntityVerification) => mock_scores(
            seed,
            user_text,
            &directives,
            &[
                ("entity_fabrication_score", "entity_fabrication_score"),
                (
                    "relationship_fabrication_score",
                    "relationship_fabrication_score",
                ),
            ],
            &[("assessments", json!([]))],
        ),
        Some(TemplateId::ClaimExtraction) => {
            let salt = hash_score(seed, user_text, "claim_count") as usize;
            let n = count_directive(&directives, "claim_count", salt % 4, 10);
            let claims: Vec<Value> = (0..n)
                .map(|i| {
                    let mut facts: Vec<Value> =
                        vec![Value::String(format!("supporting fact {}", i + 1))];
                    if let Some(echo) = &echo {
                        facts.push(Value::String(echo.clone()));
                    }
                    json!({
                        "text": format!("Claim {} extracted from the response.", i + 1),
                        "claim_type": "factual",
                        "facts_to_verify": facts,
                        "verifiability": "high",
                        "sources": [],
                    })
                })
                .collect();
            let mut map = Map::new();
            map.insert("claims".into(), Value::Array(claims));
            map
        }
        Some(TemplateId::ClaimVerification) => mock_scores(
            seed,
            user_text,
            &directives,
            // Per-claim accuracy is planted through the factual alias so one
            // sample-level directive drives the aggregated score.
            &[("accuracy_score", "factual_consistency_score")],
            &[
                ("explanation", json!("Deterministic mock verification.")),
                ("confidence", json!("medium")),
            ],
        ),
        Some(TemplateId::Uncertainty) => mock_scores(
            seed,
            user_text,
            &directives,
            &[
                ("hedging_score", "hedging_score"),
                ("certainty_score", "certainty_score"),
                ("epistemic_score", "epistemic_score"),
                ("vague_score", "vague_score"),
                ("overall_uncertainty_score", "overall_uncertainty_score"),
            ],
            &[("examples", json!([]))],
        ),
        Some(TemplateId::SentimentProfessional) => mock_scores(
            seed,
            user_text,
            &directives,
            &[
                ("relevance_score", "relevance_score"),
                ("emotional_tone_score", "emotional_tone_score"),
                ("communication_style_score", "communication_style_score"),
                ("professional_score", "professional_score"),
            ],
            &[("explanations", json!([]))],
        ),
        Some(TemplateId::MultiLlmJudge) => mock_scores(
            seed,
            user_text,
            &directives,
            &[
                ("hallucination_score", "multi_hallucination_score"),
                ("omission_score", "multi_omission_score"),
                (
                    "therapist_impersonation_score",
                    "multi_therapist_impersonation_score",
                ),
                ("human_likeness_score", "multi_human_likeness_score"),
                ("contradiction_score", "multi_contradiction_score"),
                ("relevance_score", "multi_relevance_score"),
            ],
            &[],
        ),
        Some(TemplateId::BinaryLogit) => {
            let p = match directives.get("hallucination_probability") {
                Some(&v) => v,
                None => {
                    let h = mix_seed(&[seed, fnv1a(user_text.as_bytes()), fnv1a(b"probability")]);
                    (h % 1001) as f64 / 1000.0
                }
            };
            let mut map = Map::new();
            map.insert("hallucination_probability".into(), Value::from(p));
            map
        }
        None => {
            let mut map = Map::new();
            map.insert(
                "note".into(),
                json!("mock backend did not recognize the prompt"),
            );
            map
        }
    };
    let body = serde_json::to_string_pretty(&Value::Object(fields)).expect("mock JSON");
    format!("Here is the structured analysis.\n```json\n{body}\n```\n")
}

fn mock_scores(
    seed: u64,
    user_text: &str,
    directives: &BTreeMap<String, f64>,
    score_fields: &[(&str, &str)],
    extra: &[(&str, Value)],
) -> Map<String, Value> {
    let mut map = Map::new();
    for &(field, directive_key) in score_fields {
        map.insert(
            field.to_string(),
            directive_or_score(directives, directive_key, seed, user_text, field),
        );
    }
    for (field, value) in extra {
        map.insert(field.to_string(), value.clone());
    }
    map
}
