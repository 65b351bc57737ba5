//! Feature cache and the batch extraction pipeline.
//!
//! One JSONL record per (backend_id, sample_id) holds the parsed judge
//! scores, dimensional features, optional multi-LLM and binary-logit
//! outputs, raw analyzer texts, and the template version. Extraction is
//! resumable: complete records are skipped, and records are appended in
//! dataset order regardless of worker count, so an interrupted run resumes
//! to a byte-identical file.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::dataset::{AnnotatedSample, Dataset};
use crate::ensemble::{
    binary_logit_features, multi_llm_scores, BinaryLogitFeatures, MultiJudgeScores,
};
use crate::features::{extract_all, StageRaw};
use crate::judge::{judge_pair, judge_pair_few_shot, JudgeScores};
use crate::prompts::{FewShotExemplar, TemplateRegistry};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache line {line} is not a valid record: {detail}")]
    BadRecord { line: usize, detail: String },
}

/// Everything extracted for one sample under one primary backend.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SampleRecord {
    pub sample_id: String,
    pub backend_id: String,
    pub template_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge: Option<JudgeScores>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dimensions: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dimension_failures: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_llm: Option<MultiJudgeScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary_logit: Option<BinaryLogitFeatures>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw: Vec<StageRaw>,
}

impl SampleRecord {
    /// A record is complete for a plan when every requested section parsed.
    pub fn satisfies(&self, plan: &ExtractionPlan) -> bool {
        if plan.judge && (self.judge.is_none() && self.judge_failure.is_none()) {
            return false;
        }
        if plan.dimensions && self.dimensions.is_empty() && self.dimension_failures.is_empty() {
            return false;
        }
        if plan.multi_llm && self.multi_llm.is_none() {
            return false;
        }
        if plan.binary_logit && self.binary_logit.is_none() {
            return false;
        }
        true
    }

    /// Permanently failed: something requested errored even after retries.
    pub fn failed(&self) -> bool {
        self.judge_failure.is_some() || !self.dimension_failures.is_empty()
    }
}

/// In-memory view of a cache file, keyed by sample id.
#[derive(Debug, Default, Clone)]
pub struct FeatureStore {
    records: BTreeMap<String, SampleRecord>,
}

impl FeatureStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load a cache file, tolerating a torn final line from an interrupted
    /// writer (it is dropped and re-extracted).
    pub fn load(path: &Path) -> Result<Self, StoreError> {
        Ok(Self::load_with_valid_len(path)?.0)
    }

    /// Load plus the byte length of the valid prefix. Anything past it is a
    /// torn tail that a resuming writer must truncate before appending.
    fn load_with_valid_len(path: &Path) -> Result<(Self, u64), StoreError> {
        let mut store = Self::new();
        if !path.exists() {
            return Ok((store, 0));
        }
        let content = fs::read_to_string(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut valid_len = 0u64;
        let mut offset = 0usize;
        let total_lines = content.lines().count();
        for (idx, line) in content.lines().enumerate() {
            // lines() strips the terminator; recover the on-disk span.
            let line_span = line.len() + usize::from(offset + line.len() < content.len());
            if line.trim().is_empty() {
                offset += line_span;
                valid_len = offset as u64;
                continue;
            }
            match serde_json::from_str::<SampleRecord>(line) {
                Ok(record) => {
                    store.records.insert(record.sample_id.clone(), record);
                    offset += line_span;
                    valid_len = offset as u64;
                }
                Err(e) => {
                    if idx + 1 == total_lines {
                        // Torn tail; stop here and let the caller truncate.
                        break;
                    }
                    return Err(StoreError::BadRecord {
                        line: idx + 1,
                        detail: e.to_string(),
                    });
                }
            }
        }
        Ok((store, valid_len))
    }

    pub fn get(&self, sample_id: &str) -> Option<&SampleRecord> {
        self.records.get(sample_id)
    }

    pub fn insert(&mut self, record: SampleRecord) {
        self.records.insert(record.sample_id.clone(), record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &SampleRecord> {
        self.records.values()
    }
}

/// What to extract per sample.
#[derive(Debug, Clone, Default)]
pub struct ExtractionPlan {
    pub judge: bool,
    pub dimensions: bool,
    pub multi_llm: bool,
    pub binary_logit: bool,
    /// Few-shot judging with a fixed exemplar set; 0 disables.
    pub few_shot_k: usize,
    pub exemplars: Vec<FewShotExemplar>,
}

impl ExtractionPlan {
    pub fn standard() -> Self {
        Self {
            judge: true,
            dimensions: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractionSummary {
    pub processed: usize,
    pub cache_hits: usize,
    pub failed_ids: Vec<String>,
}

/// Extract one sample according to the plan. Never panics on analyzer
/// failures; they are recorded in the record instead.
pub fn extract_sample(
    sample: &AnnotatedSample,
    backend: &Backend,
    multi_backends: &[&Backend],
    registry: &TemplateRegistry,
    plan: &ExtractionPlan,
) -> SampleRecord {
    let mut record = SampleRecord {
        sample_id: sample.id.clone(),
        backend_id: backend.id().to_string(),
        template_version: template_version_for(registry, plan),
        judge: None,
        dimensions: BTreeMap::new(),
        dimension_failures: BTreeMap::new(),
        judge_failure: None,
        multi_llm: None,
        binary_logit: None,
        flags: Vec::new(),
        raw: Vec::new(),
    };

    if plan.judge {
        let judged = if plan.few_shot_k > 0 {
            judge_pair_few_shot(backend, registry, sample, &plan.exemplars, plan.few_shot_k)
        } else {
            judge_pair(backend, registry, sample)
        };
        match judged {
            Ok(scores) => {
                if scores.clamped {
                    record.flags.push("judge score clamped".to_string());
                }
                record.judge = Some(scores);
            }
            Err(e) => record.judge_failure = Some(e.to_string()),
        }
    }

    if plan.dimensions {
        let outcome = extract_all(backend, registry, sample);
        record.dimensions = outcome.scores;
        record.dimension_failures = outcome.failures;
        record.flags.extend(outcome.flags);
        record.raw.extend(outcome.raw);
    }

    if plan.multi_llm {
        match multi_llm_scores(multi_backends, registry, sample) {
            Ok(scores) => record.multi_llm = Some(scores),
            Err(e) => {
                record
                    .dimension_failures
                    .insert("multi_llm".to_string(), e.to_string());
            }
        }
    }

    if plan.binary_logit {
        match binary_logit_features(backend, registry, sample) {
            Ok(features) => record.binary_logit = Some(features),
            Err(e) => {
                record
                    .dimension_failures
                    .insert("binary_logit".to_string(), e.to_string());
            }
        }
    }

    record
}

fn template_version_for(registry: &TemplateRegistry, plan: &ExtractionPlan) -> String {
    if plan.few_shot_k > 0 {
        format!("{}+fewshot{}", registry.version(), plan.few_shot_k)
    } else {
        registry.version().to_string()
    }
}

/// Run the plan over every sample, resuming from the cache file. Workers
/// fan out over samples; the writer commits records strictly in dataset
/// order, so the final file is byte-identical for any worker count and
/// across interrupt-resume cycles.
pub fn extract_dataset(
    dataset: &Dataset,
    backend: &Backend,
    multi_backends: &[&Backend],
    registry: &TemplateRegistry,
    plan: &ExtractionPlan,
    cache_path: &Path,
    workers: usize,
) -> Result<(FeatureStore, ExtractionSummary), StoreError> {
    let (mut store, valid_len) = FeatureStore::load_with_valid_len(cache_path)?;
    let expected_version = template_version_for(registry, plan);

    // Drop any torn tail left by an interrupted writer before appending.
    if cache_path.exists() {
        let io_err = |source| StoreError::Io {
            path: cache_path.display().to_string(),
            source,
        };
        let file_len = fs::metadata(cache_path).map_err(io_err)?.len();
        if file_len > valid_len {
            let file = fs::OpenOptions::new()
                .write(true)
                .open(cache_path)
                .map_err(io_err)?;
            file.set_len(valid_len).map_err(io_err)?;
        }
    }

    let pending: Vec<(usize, &AnnotatedSample)> = dataset
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            store
                .get(&s.id)
                .map(|r| r.template_version != expected_version || !r.satisfies(plan))
                .unwrap_or(true)
        })
        .collect();
    let cache_hits = dataset.len() - pending.len();

    if let Some(parent) = cache_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| StoreError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    let file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(cache_path)
        .map_err(|source| StoreError::Io {
            path: cache_path.display().to_string(),
            source,
        })?;
    let writer = Mutex::new(file);

    let results: Mutex<BTreeMap<usize, SampleRecord>> = Mutex::new(BTreeMap::new());
    let next_job = Mutex::new(0usize);
    let (record_tx, record_rx) = mpsc::channel::<()>();

    let workers = workers.max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(pending.len().max(1)) {
            let record_tx = record_tx.clone();
            scope.spawn(|| {
                // Move the sender into the worker so the channel closes when
                // all workers finish.
                let _tx = record_tx;
                loop {
                    let job = {
                        let mut guard = next_job.lock().unwrap();
                        let j = *guard;
                        if j >= pending.len() {
                            break;
                        }
                        *guard += 1;
                        j
                    };
                    let (position, sample) = pending[job];
                    let record = extract_sample(sample, backend, multi_backends, registry, plan);
                    results.lock().unwrap().insert(position, record);
                    let _ = _tx.send(());
                }
            });
        }
        drop(record_tx);

        // Writer: commit results in dataset order as they become available.
        let positions: Vec<usize> = pending.iter().map(|(p, _)| *p).collect();
        let flush_ready = |write_cursor: &mut usize,
                           store_updates: &mut Vec<SampleRecord>|
         -> Result<(), StoreError> {
            let mut guard = results.lock().unwrap();
            while *write_cursor < positions.len() {
                let position = positions[*write_cursor];
                let Some(record) = guard.remove(&position) else {
                    break;
                };
                let line = serde_json::to_string(&record).expect("record serializes");
                let mut file = writer.lock().unwrap();
                writeln!(file, "{line}").map_err(|source| StoreError::Io {
                    path: cache_path.display().to_string(),
                    source,
                })?;
                file.flush().map_err(|source| StoreError::Io {
                    path: cache_path.display().to_string(),
                    source,
                })?;
                store_updates.push(record);
                *write_cursor += 1;
            }
            Ok(())
        };

        let mut write_cursor = 0usize;
        let mut store_updates = Vec::new();
        while write_cursor < positions.len() {
            if record_rx.recv().is_err() {
                break;
            }
            flush_ready(&mut write_cursor, &mut store_updates)?;
        }
        flush_ready(&mut write_cursor, &mut store_updates)?;
        for record in store_updates {
            store.insert(record);
        }
        Ok::<(), StoreError>(())
    })?;

    let failed_ids: Vec<String> = dataset
        .samples()
        .iter()
        .filter(|s| store.get(&s.id).map(SampleRecord::failed).unwrap_or(false))
        .map(|s| s.id.clone())
        .collect();

    Ok((
        store,
        ExtractionSummary {
            processed: pending.len(),
            cache_hits,
            failed_ids,
        },
    ))
}

/// Canonical cache path for a backend under a cache directory.
pub fn cache_path_for(cache_dir: &Path, backend_id: &str) -> PathBuf {
    cache_dir.join(format!("features_{backend_id}.jsonl"))
}

/// Enhanced feature vectors as CSV: a header row of feature names, one row
/// per cached sample in id order. Failed fields are empty cells.
pub fn vectors_csv(store: &FeatureStore) -> String {
    use crate::features::{DIMENSION_FEATURE_NAMES, JUDGE_FEATURE_NAMES};
    let mut out = String::from("sample_id");
    for name in JUDGE_FEATURE_NAMES
        .iter()
        .chain(DIMENSION_FEATURE_NAMES.iter())
    {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for record in store.records() {
        out.push_str(&record.sample_id);
        let judge = [
            record.judge.as_ref().map(|j| f64::from(j.hal_score)),
            record.judge.as_ref().map(|j| f64::from(j.omis_score)),
        ];
        for value in judge {
            out.push(',');
            if let Some(v) = value {
                out.push_str(&format!("{v}"));
            }
        }
        for name in DIMENSION_FEATURE_NAMES {
            out.push(',');
            if let Some(v) = record.dimensions.get(name) {
                out.push_str(&format!("{v}"));
            }
        }
        out.push('\n');
    }
    out
}
