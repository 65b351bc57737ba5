//! Synthetic corpora with planted feature signal.
//!
//! The generator writes mock directives into each response so the mock
//! backend reproduces exactly the planted feature values through the full
//! extraction pipeline. Informative features are drawn from disjoint ranges
//! per class, so the classes are separated by a known linear rule (any
//! threshold on the sum of informative features) with a real margin, while
//! the remaining features are uniform noise.

use crate::dataset::{AnnotatedSample, Dataset, SampleSource, Task};
use crate::features::{DIMENSION_FEATURE_NAMES, JUDGE_FEATURE_NAMES};
use crate::rng::{mix_seed, SplitMix64};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub n_samples: usize,
    pub n_positive: usize,
    pub task: Task,
    pub seed: u64,
    /// Names among the 15 enhanced-vector features that carry class signal.
    pub informative: Vec<String>,
    /// Value range for informative features on positive samples.
    pub pos_range: (f64, f64),
    /// Value range for informative features on negative samples.
    pub neg_range: (f64, f64),
}

impl SyntheticConfig {
    /// Five informative features out of 15, disjoint class ranges, 3%
    /// positive rate by default.
    pub fn planted(n_samples: usize, task: Task, seed: u64) -> Self {
        Self {
            n_samples,
            n_positive: (n_samples as f64 * 0.03).round().max(1.0) as usize,
            task,
            seed,
            informative: vec![
                "hal_score".to_string(),
                "contradiction_score".to_string(),
                "entity_fabrication_score".to_string(),
                "hedging_score".to_string(),
                "relevance_score".to_string(),
            ],
            pos_range: (6.5, 10.0),
            neg_range: (1.0, 6.0),
        }
    }

    /// One perfectly separating feature; everything else is noise. Used by
    /// the ablation sensitivity checks.
    pub fn single_informative(n_samples: usize, feature: &str, task: Task, seed: u64) -> Self {
        Self {
            informative: vec![feature.to_string()],
            ..Self::planted(n_samples, task, seed)
        }
    }
}

/// All 15 enhanced-vector feature names in canonical order.
pub fn enhanced_feature_names() -> Vec<String> {
    JUDGE_FEATURE_NAMES
        .iter()
        .chain(DIMENSION_FEATURE_NAMES.iter())
        .map(|s| s.to_string())
        .collect()
}

/// Generate a dataset whose mock-extracted features follow the planted rule.
pub fn generate(config: &SyntheticConfig) -> Dataset {
    assert!(config.n_positive < config.n_samples);
    let mut assign_rng = SplitMix64::new(mix_seed(&[config.seed, 0xA551]));
    let mut order: Vec<usize> = (0..config.n_samples).collect();
    assign_rng.shuffle(&mut order);
    let mut is_positive = vec![false; config.n_samples];
    for &idx in order.iter().take(config.n_positive) {
        is_positive[idx] = true;
    }

    let mut samples = Vec::with_capacity(config.n_samples);
    for (i, &positive) in is_positive.iter().enumerate() {
        let label = u8::from(positive);
        let mut rng = SplitMix64::new(mix_seed(&[config.seed, i as u64, 0x5A17]));
        let mut directives: Vec<String> = Vec::new();
        for name in enhanced_feature_names() {
            let (low, high) = if config.informative.contains(&name) {
                if label == 1 {
                    config.pos_range
                } else {
                    config.neg_range
                }
            } else {
                (1.0, 10.0)
            };
            if JUDGE_FEATURE_NAMES.contains(&name.as_str()) {
                // Judge scores are integers on the 1-10 scale.
                let span = (high - low).max(1.0);
                let value = (low + rng.next_f64() * span).round().clamp(1.0, 10.0);
                directives.push(format!("{name}={value}"));
            } else {
                let value = rng.next_range(low, high);
                directives.push(format!("{name}={value:.4}"));
            }
        }
        // Keep the two-stage chains alive so every analyzer runs.
        directives.push("entity_count=1".to_string());
        directives.push("claim_count=1".to_string());

        let (label_hallucination, label_omission) = match config.task {
            Task::Hallucination => (Some(label), None),
            Task::Omission => (None, Some(label)),
        };
        samples.push(AnnotatedSample {
            id: format!("syn-{i:05}"),
            prompt: format!("synthetic user prompt {i} about coping strategies"),
            response: format!(
                "synthetic chatbot response {i}. [[mock: {}]]",
                directives.join(", ")
            ),
            label_hallucination,
            label_omission,
            source: SampleSource::Synthetic,
        });
    }
    Dataset::from_samples(samples).expect("generated ids are unique and texts non-empty")
}

/// Copy of the dataset with the task labels randomly permuted across
/// samples. Marginals are preserved; any real signal is destroyed.
pub fn shuffle_labels(dataset: &Dataset, task: Task, seed: u64) -> Dataset {
    let mut labels: Vec<u8> = dataset
        .samples()
        .iter()
        .filter_map(|s| task.label_of(s))
        .collect();
    let mut rng = SplitMix64::new(mix_seed(&[seed, 0x5FFF]));
    rng.shuffle(&mut labels);

    let mut cursor = 0;
    let samples: Vec<AnnotatedSample> = dataset
        .samples()
        .iter()
        .cloned()
        .map(|mut s| {
            if task.label_of(&s).is_some() {
                let new_label = labels[cursor];
                cursor += 1;
                match task {
                    Task::Hallucination => s.label_hallucination = Some(new_label),
                    Task::Omission => s.label_omission = Some(new_label),
                }
            }
            s
        })
        .collect();
    Dataset::from_samples(samples).expect("ids unchanged")
}
