use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use halo_core::cli::{
    cmd_ablate, cmd_evaluate, cmd_extract, cmd_ingest, cmd_report, AblationMode, CliError,
    IngestArgs, RunConfig,
};
use halo_core::dataset::Task;
use halo_core::eval::Pipeline;
use halo_core::ml::Family;

/// Hallucination and omission detection for mental-health chatbot responses.
#[derive(Parser)]
#[command(name = "halo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a CSV or JSONL corpus to the canonical JSONL format.
    Ingest {
        /// Input file (.csv with --mapping, or .jsonl).
        #[arg(long)]
        input: PathBuf,
        /// Output canonical JSONL path.
        #[arg(long)]
        output: PathBuf,
        /// Column-mapping JSON file for CSV inputs.
        #[arg(long)]
        mapping: Option<PathBuf>,
    },
    /// Run judge and feature extraction into the cache (resumable).
    Extract(CommonArgs),
    /// Run cross-validated evaluation over pipelines and classifier families.
    Evaluate(CommonArgs),
    /// Run feature ablations and correlation analysis.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        /// Analyses to run: group, single, loo, corr.
        #[arg(long, value_delimiter = ',', default_values_t = vec![
            "group".to_string(), "single".to_string(), "loo".to_string(), "corr".to_string()
        ])]
        modes: Vec<String>,
    },
    /// Render evaluation outputs into a markdown summary.
    Report {
        /// Directory holding metrics.csv and per-run reports.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Output file (defaults to <out-dir>/report.md).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Declarative run-config JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Canonical JSONL dataset.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Tasks: hal, omis, or both.
    #[arg(long)]
    task: Option<String>,
    /// Backend config JSON (defaults to the deterministic mock).
    #[arg(long)]
    backend: Option<PathBuf>,
    /// JSON array of backend configs for multi-LLM scoring.
    #[arg(long)]
    multi_backends: Option<PathBuf>,
    /// Pipelines, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pipeline: Option<Vec<String>>,
    /// Classifier families, comma-separated.
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Few-shot examples prepended to the judge prompt (0, 2, 4, 6, 8).
    #[arg(long)]
    few_shot_k: Option<usize>,
    /// Labeled JSONL file supplying few-shot exemplars.
    #[arg(long)]
    exemplars: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Also extract the binary-logit probability per sample.
    #[arg(long)]
    with_binary_logit: bool,
    /// Also extract multi-LLM scores (requires --multi-backends).
    #[arg(long)]
    with_multi_llm: bool,
}

fn parse_tasks(spec: &str) -> Result<Vec<Task>, CliError> {
    match spec {
        "hal" => Ok(vec![Task::Hallucination]),
        "omis" => Ok(vec![Task::Omission]),
        "both" => Ok(vec![Task::Hallucination, Task::Omission]),
        other => Err(CliError::Usage(format!(
            "unknown task {other:?}; expected hal, omis, or both"
        ))),
    }
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dataset) = &self.dataset {
            config.dataset = Some(dataset.clone());
        }
        if let Some(task) = &self.task {
            config.tasks = parse_tasks(task)?;
        }
        if let Some(backend) = &self.backend {
            config.backend = Some(backend.clone());
        }
        if let Some(multi) = &self.multi_backends {
            config.multi_backends = Some(multi.clone());
        }
        if let Some(pipelines) = &self.pipeline {
            config.pipelines = pipelines
                .iter()
                .map(|name| {
                    Pipeline::parse(name)
                        .ok_or_else(|| CliError::Usage(format!("unknown pipeline {name:?}")))
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(families) = &self.families {
            config.families = families
                .iter()
                .map(|name| {
                    Family::parse(name)
                        .ok_or_else(|| CliError::Usage(format!("unknown family {name:?}")))
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(cache_dir) = &self.cache_dir {
            config.cache_dir = cache_dir.clone();
        }
        if let Some(out_dir) = &self.out_dir {
            config.out_dir = out_dir.clone();
        }
        if let Some(few_shot_k) = self.few_shot_k {
            config.few_shot_k = few_shot_k;
        }
        if let Some(exemplars) = &self.exemplars {
            config.exemplars = Some(exemplars.clone());
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        if self.with_binary_logit {
            config.with_binary_logit = true;
        }
        if self.with_multi_llm {
            config.with_multi_llm = true;
        }
        Ok(config)
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest {
            input,
            output,
            mapping,
        } => cmd_ingest(&IngestArgs {
            input,
            output,
            mapping,
        }),
        Command::Extract(common) => {
            let config = common.resolve()?;
            cmd_extract(&config).map(|_| ())
        }
        Command::Evaluate(common) => {
            let config = common.resolve()?;
            cmd_evaluate(&config).map(|_| ())
        }
        Command::Ablate { common, modes } => {
            let config = common.resolve()?;
            let modes: Vec<AblationMode> = modes
                .iter()
                .map(|name| {
                    AblationMode::parse(name)
                        .ok_or_else(|| CliError::Usage(format!("unknown ablation mode {name:?}")))
                })
                .collect::<Result<_, _>>()?;
            cmd_ablate(&config, &modes)
        }
        Command::Report { out_dir, output } => cmd_report(&out_dir, output.as_deref()).map(|_| ()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
