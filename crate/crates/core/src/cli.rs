//! Command implementations behind the `halo` binary: ingest, extract,
//! evaluate, ablate, report. Configuration comes from one declarative run
//! file plus flag overrides; every report embeds the resolved config and
//! template version. Re-running any command on unchanged inputs with mock
//! backends produces byte-identical outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ablation::{
    group_ablation, judge_feature_correlations, leave_one_out, single_feature, AblationError,
    AblationResult,
};
use crate::backend::{Backend, BackendConfig, BackendError};
use crate::dataset::{
    compute_stats, convert_csv, load_jsonl, write_jsonl, CsvMapping, Dataset, DatasetError,
    LoadReport, Task,
};
use crate::eval::{run_cv, select_best, CVReport, CvConfig, EvalError, Pipeline};
use crate::ml::{ClassifierSpec, Family, MlError};
use crate::prompts::{FewShotExemplar, PromptError, TemplateRegistry};
use crate::store::{
    cache_path_for, extract_dataset, ExtractionPlan, ExtractionSummary, FeatureStore, StoreError,
};

/// Exit codes: 0 success, 1 runtime failure, 2 usage or validation problem.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

macro_rules! runtime_from {
    ($($ty:ty),*) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Runtime(e.to_string())
            }
        })*
    };
}
runtime_from!(
    DatasetError,
    BackendError,
    StoreError,
    MlError,
    AblationError,
    PromptError
);

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match &e {
            EvalError::MissingFeatures { .. } => CliError::Runtime(format!(
                "{e}; run `halo extract` against this dataset and cache directory first"
            )),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

/// Declarative run configuration. Every field can be overridden by a flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub tasks: Vec<Task>,
    pub backend: Option<PathBuf>,
    pub multi_backends: Option<PathBuf>,
    pub pipelines: Vec<Pipeline>,
    pub families: Vec<Family>,
    pub k: usize,
    pub seed: u64,
    pub cache_dir: PathBuf,
    pub out_dir: PathBuf,
    pub few_shot_k: usize,
    pub exemplars: Option<PathBuf>,
    pub workers: usize,
    pub with_binary_logit: bool,
    pub with_multi_llm: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            tasks: vec![Task::Hallucination],
            backend: None,
            multi_backends: None,
            pipelines: vec![Pipeline::JudgeOnly, Pipeline::FeaturesMl],
            families: vec![Family::Logistic, Family::RandomForest, Family::Gbdt],
            k: 5,
            seed: 42,
            cache_dir: PathBuf::from("cache"),
            out_dir: PathBuf::from("out"),
            few_shot_k: 0,
            exemplars: None,
            workers: 4,
            with_binary_logit: false,
            with_multi_llm: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

fn io_runtime(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("i/o error on {}: {e}", path.display()))
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let report = load_jsonl(path)?;
    if !report.line_issues.is_empty() {
        let mut message = format!(
            "{} invalid lines in {}:\n",
            report.line_issues.len(),
            path.display()
        );
        for issue in &report.line_issues {
            let _ = writeln!(message, "  {issue}");
        }
        return Err(CliError::Usage(message));
    }
    Ok(report.dataset)
}

/// Default deterministic mock backend used when no backend file is given.
fn default_backend() -> BackendConfig {
    BackendConfig::mock("mock", 42)
}

fn load_backend(path: Option<&Path>) -> Result<Backend, CliError> {
    let config = match path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!(
                    "cannot read backend config {}: {e}",
                    path.display()
                ))
            })?;
            serde_json::from_str::<BackendConfig>(&text).map_err(|e| {
                CliError::Usage(format!("bad backend config {}: {e}", path.display()))
            })?
        }
        None => default_backend(),
    };
    Ok(Backend::new(config)?)
}

fn load_multi_backends(path: Option<&Path>) -> Result<Vec<Backend>, CliError> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read backend list {}: {e}", path.display()))
    })?;
    let configs: Vec<BackendConfig> = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad backend list {}: {e}", path.display())))?;
    configs
        .into_iter()
        .map(|c| Backend::new(c).map_err(CliError::from))
        .collect()
}

fn load_exemplars(path: &Path, task: Task) -> Result<Vec<FewShotExemplar>, CliError> {
    let dataset = load_dataset(path)?;
    let exemplars: Vec<FewShotExemplar> = dataset
        .samples()
        .iter()
        .filter_map(|s| {
            task.label_of(s).map(|label| FewShotExemplar {
                prompt: s.prompt.clone(),
                response: s.response.clone(),
                label,
                task,
            })
        })
        .collect();
    if exemplars.is_empty() {
        return Err(CliError::Usage(format!(
            "exemplar file {} has no labeled samples for task {task}",
            path.display()
        )));
    }
    Ok(exemplars)
}

pub struct IngestArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub mapping: Option<PathBuf>,
}

/// Convert CSV or JSONL input into the canonical JSONL format and print the
/// dataset statistics. Any invalid line fails the command with exit 2 after
/// writing the valid subset and printing one diagnostic per line.
pub fn cmd_ingest(args: &IngestArgs) -> Result<(), CliError> {
    let is_csv = args
        .input
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    let report: LoadReport = if is_csv {
        let mapping = match &args.mapping {
            Some(path) => CsvMapping::load(path)?,
            None => return Err(CliError::Usage(
                "CSV ingestion requires --mapping <file> naming the prompt/response/label columns"
                    .to_string(),
            )),
        };
        convert_csv(&args.input, &mapping)?
    } else {
        load_jsonl(&args.input)?
    };

    write_jsonl(&report.dataset, &args.output)?;
    let stats = compute_stats(&report.dataset)?;
    println!(
        "ingested {} samples -> {}",
        report.dataset.len(),
        args.output.display()
    );
    println!(
        "hallucination: {} positive ({:.4})  omission: {} positive ({:.4})",
        stats.n_pos_hal, stats.pos_rate_hal, stats.n_pos_omis, stats.pos_rate_omis
    );
    if !report.line_issues.is_empty() {
        eprintln!("{} invalid lines:", report.line_issues.len());
        for issue in &report.line_issues {
            eprintln!("  {issue}");
        }
        return Err(CliError::Usage(format!(
            "{} lines failed validation",
            report.line_issues.len()
        )));
    }
    Ok(())
}

/// Populate the feature cache for every sample. Resumable; exits nonzero if
/// any sample permanently failed.
pub fn cmd_extract(config: &RunConfig) -> Result<ExtractionSummary, CliError> {
    let dataset_path = config
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Usage("--dataset is required".to_string()))?;
    let dataset = load_dataset(dataset_path)?;
    let backend = load_backend(config.backend.as_deref())?;
    let multi_backends = load_multi_backends(config.multi_backends.as_deref())?;
    // Fail fast on missing credentials before touching any sample.
    backend.check_credentials()?;
    for multi in &multi_backends {
        multi.check_credentials()?;
    }
    let registry = TemplateRegistry::new()?;

    let exemplars = match (&config.exemplars, config.few_shot_k) {
        (Some(path), k) if k > 0 => load_exemplars(path, config.tasks[0])?,
        (None, k) if k > 0 => {
            return Err(CliError::Usage(
                "--few-shot-k requires --exemplars <labeled jsonl>".to_string(),
            ))
        }
        _ => Vec::new(),
    };

    let plan = ExtractionPlan {
        judge: true,
        dimensions: true,
        multi_llm: config.with_multi_llm && !multi_backends.is_empty(),
        binary_logit: config.with_binary_logit,
        few_shot_k: config.few_shot_k,
        exemplars,
    };
    let multi_refs: Vec<&Backend> = multi_backends.iter().collect();
    let cache_path = cache_path_for(&config.cache_dir, backend.id());
    let (store, summary) = extract_dataset(
        &dataset,
        &backend,
        &multi_refs,
        &registry,
        &plan,
        &cache_path,
        config.workers,
    )?;
    let vectors_path = config
        .cache_dir
        .join(format!("vectors_{}.csv", backend.id()));
    write_text(&vectors_path, &crate::store::vectors_csv(&store))?;
    println!(
        "extracted {} samples ({} cache hits) -> {}",
        summary.processed,
        summary.cache_hits,
        cache_path.display()
    );
    if !summary.failed_ids.is_empty() {
        eprintln!("{} samples permanently failed:", summary.failed_ids.len());
        for id in &summary.failed_ids {
            eprintln!("  {id}");
        }
        return Err(CliError::Runtime(format!(
            "{} samples failed extraction",
            summary.failed_ids.len()
        )));
    }
    Ok(summary)
}

/// Envelope written next to every CV run for provenance.
#[derive(Debug, Serialize)]
struct ReportEnvelope<'a> {
    template_version: &'a str,
    config: &'a RunConfig,
    report: &'a CVReport,
}

fn format_float(v: f64) -> String {
    format!("{v:.6}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub const METRICS_CSV_HEADER: &str = "task,pipeline,family,accuracy,accuracy_std,precision,precision_std,recall,recall_std,f1,f1_std,pr_auc,pr_auc_std,roc_auc,roc_auc_std,thresholds,k,seed";

fn metrics_csv_row(report: &CVReport) -> String {
    let thresholds: Vec<String> = report
        .folds
        .iter()
        .filter_map(|f| f.threshold.map(|t| t.threshold.to_string()))
        .collect();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        report.task,
        report.pipeline,
        report.family.map(|f| f.to_string()).unwrap_or_default(),
        format_float(report.mean.accuracy),
        format_float(report.std.accuracy),
        format_float(report.mean.precision),
        format_float(report.std.precision),
        format_float(report.mean.recall),
        format_float(report.std.recall),
        format_float(report.mean.f1),
        format_float(report.std.f1),
        format_opt(report.mean.pr_auc),
        format_opt(report.std.pr_auc),
        format_opt(report.mean.roc_auc),
        format_opt(report.std.roc_auc),
        thresholds.join(";"),
        report.k,
        report.seed,
    )
}

fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_runtime(parent))?;
        }
    }
    fs::write(path, content).map_err(io_runtime(path))
}

/// Run cross-validation for every requested (task, pipeline, family) and
/// emit one JSON report per configuration plus a merged CSV.
pub fn cmd_evaluate(config: &RunConfig) -> Result<Vec<CVReport>, CliError> {
    let dataset_path = config
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Usage("--dataset is required".to_string()))?;
    let dataset = load_dataset(dataset_path)?;
    let backend = load_backend(config.backend.as_deref())?;
    let cache_path = cache_path_for(&config.cache_dir, backend.id());
    let store = FeatureStore::load(&cache_path)?;
    let store_ref = if store.is_empty() { None } else { Some(&store) };

    let cv = CvConfig {
        k: config.k,
        seed: config.seed,
        ..CvConfig::default()
    };

    let mut reports = Vec::new();
    let mut csv = String::from(METRICS_CSV_HEADER);
    csv.push('\n');
    for &task in &config.tasks {
        for &pipeline in &config.pipelines {
            if pipeline.needs_classifier() {
                for &family in &config.families {
                    let spec = ClassifierSpec::default_for(family, config.seed);
                    let report = run_cv(&dataset, store_ref, task, pipeline, Some(&spec), &cv)?;
                    csv.push_str(&metrics_csv_row(&report));
                    csv.push('\n');
                    write_report(config, &report)?;
                    reports.push(report);
                }
            } else {
                let report = run_cv(&dataset, store_ref, task, pipeline, None, &cv)?;
                csv.push_str(&metrics_csv_row(&report));
                csv.push('\n');
                write_report(config, &report)?;
                reports.push(report);
            }
        }
    }
    write_text(&config.out_dir.join("metrics.csv"), &csv)?;
    println!(
        "wrote {} runs to {}",
        reports.len(),
        config.out_dir.display()
    );
    Ok(reports)
}

fn write_report(config: &RunConfig, report: &CVReport) -> Result<(), CliError> {
    let name = format!(
        "cv_{}_{}_{}.json",
        report.task,
        report.pipeline,
        report
            .family
            .map(|f| f.to_string())
            .unwrap_or_else(|| "none".to_string())
    );
    let envelope = ReportEnvelope {
        template_version: crate::prompts::TEMPLATE_VERSION,
        config,
        report,
    };
    let json = serde_json::to_string_pretty(&envelope).expect("report serializes");
    write_text(&config.out_dir.join(name), &json)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationMode {
    Group,
    Single,
    LeaveOneOut,
    Correlation,
}

impl AblationMode {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "group" => Some(Self::Group),
            "single" => Some(Self::Single),
            "loo" | "leave_one_out" => Some(Self::LeaveOneOut),
            "corr" | "correlation" => Some(Self::Correlation),
            _ => None,
        }
    }
}

fn ablation_csv(results: &[AblationResult]) -> String {
    let mut out =
        String::from("removed_or_isolated,metric,metric_full,metric_ablated,delta,task,pipeline\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.removed_or_isolated,
            r.metric_name,
            format_float(r.metric_full),
            format_float(r.metric_ablated),
            format_float(r.delta),
            r.task,
            r.pipeline
        );
    }
    out
}

/// Run the requested ablation analyses. The classifier family is the
/// select_best winner across the configured families on the full features,
/// re-tuned per ablated feature set inside each run.
pub fn cmd_ablate(config: &RunConfig, modes: &[AblationMode]) -> Result<(), CliError> {
    let dataset_path = config
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Usage("--dataset is required".to_string()))?;
    let dataset = load_dataset(dataset_path)?;
    let backend = load_backend(config.backend.as_deref())?;
    let cache_path = cache_path_for(&config.cache_dir, backend.id());
    let store = FeatureStore::load(&cache_path)?;
    if store.is_empty() {
        return Err(CliError::Runtime(format!(
            "feature cache {} is empty; run `halo extract` first",
            cache_path.display()
        )));
    }
    let cv = CvConfig {
        k: config.k,
        seed: config.seed,
        ..CvConfig::default()
    };

    for &task in &config.tasks {
        // Pick the winning family on the full feature set.
        let mut full_reports = Vec::new();
        for &family in &config.families {
            let spec = ClassifierSpec::default_for(family, config.seed);
            full_reports.push(run_cv(
                &dataset,
                Some(&store),
                task,
                Pipeline::FeaturesMl,
                Some(&spec),
                &cv,
            )?);
        }
        let winner = select_best(&full_reports)
            .ok_or_else(|| CliError::Usage("no classifier families configured".to_string()))?;
        let family = full_reports[winner].family.expect("ml run has a family");
        let spec = ClassifierSpec::default_for(family, config.seed);
        println!("ablation family for {task}: {family}");

        for mode in modes {
            match mode {
                AblationMode::Group => {
                    let results = group_ablation(&dataset, &store, task, &spec, &cv)?;
                    write_text(
                        &config.out_dir.join(format!("ablation_group_{task}.csv")),
                        &ablation_csv(&results),
                    )?;
                }
                AblationMode::Single => {
                    let results = single_feature(&dataset, &store, task, &spec, &cv)?;
                    write_text(
                        &config.out_dir.join(format!("ablation_single_{task}.csv")),
                        &ablation_csv(&results),
                    )?;
                }
                AblationMode::LeaveOneOut => {
                    let results = leave_one_out(&dataset, &store, task, &spec, &cv)?;
                    write_text(
                        &config.out_dir.join(format!("ablation_loo_{task}.csv")),
                        &ablation_csv(&results),
                    )?;
                }
                AblationMode::Correlation => {
                    let correlations = judge_feature_correlations(&dataset, &store, task)?;
                    let mut out = String::from("judge_score,feature,pearson_r\n");
                    for (judge, feature, r) in correlations {
                        let _ = writeln!(out, "{judge},{feature},{}", format_float(r));
                    }
                    write_text(
                        &config.out_dir.join(format!("correlation_{task}.csv")),
                        &out,
                    )?;
                }
            }
        }
    }
    println!("ablation outputs in {}", config.out_dir.display());
    Ok(())
}

/// Render the merged metrics CSV into a markdown summary with best-model
/// selection per task.
pub fn cmd_report(out_dir: &Path, output: Option<&Path>) -> Result<String, CliError> {
    let metrics_path = out_dir.join("metrics.csv");
    if !metrics_path.exists() {
        let message = "no runs found; run `halo evaluate` first".to_string();
        println!("{message}");
        return Ok(message);
    }
    let content = fs::read_to_string(&metrics_path).map_err(io_runtime(&metrics_path))?;
    let mut rows: Vec<BTreeMap<String, String>> = Vec::new();
    let mut lines = content.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        rows.push(
            header
                .iter()
                .zip(cells)
                .map(|(h, c)| (h.to_string(), c.to_string()))
                .collect(),
        );
    }

    let mut report = String::from("# Evaluation summary\n\n");
    let _ = writeln!(
        report,
        "Across-fold mean and population std over k folds; seed and k as configured per run.\n"
    );
    let _ = writeln!(
        report,
        "| task | pipeline | family | accuracy | precision | recall | F1 | PR-AUC | ROC-AUC |"
    );
    let _ = writeln!(report, "|---|---|---|---|---|---|---|---|---|");
    let fmt_pm = |row: &BTreeMap<String, String>, name: &str| -> String {
        let mean = row.get(name).cloned().unwrap_or_default();
        let std = row.get(&format!("{name}_std")).cloned().unwrap_or_default();
        if mean.is_empty() {
            "-".to_string()
        } else {
            format!("{:.3} ± {:.3}", parse_f64(&mean), parse_f64(&std))
        }
    };
    for row in &rows {
        let _ = writeln!(
            report,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            row["task"],
            row["pipeline"],
            if row["family"].is_empty() {
                "-"
            } else {
                &row["family"]
            },
            fmt_pm(row, "accuracy"),
            fmt_pm(row, "precision"),
            fmt_pm(row, "recall"),
            fmt_pm(row, "f1"),
            fmt_pm(row, "pr_auc"),
            fmt_pm(row, "roc_auc"),
        );
    }

    report.push('\n');
    let mut tasks: Vec<String> = rows.iter().map(|r| r["task"].clone()).collect();
    tasks.sort();
    tasks.dedup();
    for task in tasks {
        let best = rows.iter().filter(|r| r["task"] == task).max_by(|a, b| {
            let fa = parse_f64(&a["f1"]);
            let fb = parse_f64(&b["f1"]);
            fa.partial_cmp(&fb).unwrap().then_with(|| {
                parse_f64(&a["roc_auc"])
                    .partial_cmp(&parse_f64(&b["roc_auc"]))
                    .unwrap()
            })
        });
        if let Some(best) = best {
            let _ = writeln!(
                report,
                "Best for {task}: {} {} (F1 = {:.3})",
                best["pipeline"],
                if best["family"].is_empty() {
                    ""
                } else {
                    &best["family"]
                },
                parse_f64(&best["f1"]),
            );
        }
    }

    let output = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_dir.join("report.md"));
    write_text(&output, &report)?;
    println!("wrote {}", output.display());
    Ok(report)
}

fn parse_f64(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, SyntheticConfig};
    use std::io::Write as _;

    fn write_synthetic_dataset(dir: &Path, n: usize) -> PathBuf {
        let config = SyntheticConfig {
            n_positive: n / 4,
            ..SyntheticConfig::planted(n, Task::Hallucination, 42)
        };
        let dataset = generate(&config);
        let path = dir.join("data.jsonl");
        write_jsonl(&dataset, &path).unwrap();
        path
    }

    fn run_config(dir: &Path, dataset: PathBuf) -> RunConfig {
        RunConfig {
            dataset: Some(dataset),
            tasks: vec![Task::Hallucination],
            pipelines: vec![Pipeline::JudgeOnly, Pipeline::FeaturesMl],
            families: vec![Family::Logistic],
            cache_dir: dir.join("cache"),
            out_dir: dir.join("out"),
            workers: 2,
            ..RunConfig::default()
        }
    }

    #[test]
    fn extract_then_evaluate_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_synthetic_dataset(dir.path(), 40);
        let config = run_config(dir.path(), dataset);

        let summary = cmd_extract(&config).unwrap();
        assert_eq!(summary.processed, 40);

        let reports = cmd_evaluate(&config).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(dir.path().join("out/metrics.csv").exists());
        assert!(dir
            .path()
            .join("out/cv_hal_features_ml_logistic.json")
            .exists());

        let markdown = cmd_report(&config.out_dir, None).unwrap();
        assert!(markdown.contains("Best for hal"));
    }

    #[test]
    fn evaluate_without_cache_names_remediation() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_synthetic_dataset(dir.path(), 30);
        let config = run_config(dir.path(), dataset);
        let err = cmd_evaluate(&config).unwrap_err();
        match err {
            CliError::Runtime(message) => assert!(message.contains("halo extract")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn report_with_no_runs_says_so() {
        let dir = tempfile::tempdir().unwrap();
        let message = cmd_report(dir.path(), None).unwrap();
        assert!(message.contains("no runs found"));
    }

    #[test]
    fn ingest_round_trips_jsonl_and_reports_stats() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.jsonl");
        let mut file = fs::File::create(&input).unwrap();
        for i in 0..10 {
            writeln!(
                file,
                r#"{{"id":"s{i}","prompt":"p{i}","response":"r{i}","label_hallucination":{}}}"#,
                i % 2
            )
            .unwrap();
        }
        let output = dir.path().join("out.jsonl");
        cmd_ingest(&IngestArgs {
            input,
            output: output.clone(),
            mapping: None,
        })
        .unwrap();
        let loaded = load_jsonl(&output).unwrap();
        assert_eq!(loaded.dataset.len(), 10);
    }

    #[test]
    fn ingest_invalid_lines_exit_usage() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.jsonl");
        let mut file = fs::File::create(&input).unwrap();
        writeln!(file, r#"{{"id":"a","prompt":"p","response":"r"}}"#).unwrap();
        writeln!(file, r#"{{"id":"b","prompt":"p"}}"#).unwrap();
        let err = cmd_ingest(&IngestArgs {
            input,
            output: dir.path().join("out.jsonl"),
            mapping: None,
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn extract_exports_vectors_csv_and_preflights_credentials() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_synthetic_dataset(dir.path(), 12);
        let config = run_config(dir.path(), dataset.clone());
        cmd_extract(&config).unwrap();
        let csv = fs::read_to_string(dir.path().join("cache/vectors_mock.csv")).unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("sample_id,hal_score,omis_score,"));
        assert_eq!(header.split(',').count(), 16);
        assert_eq!(lines.count(), 12);

        // Missing API key must fail before any sample is processed.
        let backend_path = dir.path().join("backend.json");
        fs::write(
            &backend_path,
            r#"{"id":"remote","kind":"http_chat","endpoint":"http://127.0.0.1:9/v1",
               "model_name":"m","auth_env":"HALO_TEST_NO_SUCH_KEY","max_retries":0,"timeout_s":1}"#,
        )
        .unwrap();
        let config = RunConfig {
            backend: Some(backend_path),
            cache_dir: dir.path().join("cache_http"),
            ..run_config(dir.path(), dataset)
        };
        let err = cmd_extract(&config).unwrap_err();
        assert!(err.to_string().contains("HALO_TEST_NO_SUCH_KEY"));
        assert!(!dir.path().join("cache_http").exists());
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_synthetic_dataset(dir.path(), 32);
        let mut config = run_config(dir.path(), dataset);
        config.pipelines = vec![Pipeline::FeaturesMl];

        cmd_extract(&config).unwrap();
        cmd_evaluate(&config).unwrap();
        let metrics_a = fs::read(dir.path().join("out/metrics.csv")).unwrap();
        let cache_a = fs::read(dir.path().join("cache/features_mock.jsonl")).unwrap();

        cmd_extract(&config).unwrap();
        cmd_evaluate(&config).unwrap();
        let metrics_b = fs::read(dir.path().join("out/metrics.csv")).unwrap();
        let cache_b = fs::read(dir.path().join("cache/features_mock.jsonl")).unwrap();

        assert_eq!(metrics_a, metrics_b);
        assert_eq!(cache_a, cache_b);
    }
}
