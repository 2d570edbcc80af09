//! Command-line entry points: `run` drives the full extraction loop on a CSV,
//! `analyze-mrr` and `analyze-pearson` reproduce the score-table and
//! correlation meta-analyses, and `report` regenerates a run's report from
//! its artifacts. Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use featforge::analysis::{self, TieRule};
use featforge::dataset::{load_csv, TaskKind};
use featforge::orchestrator::{
    self, BackendConfig, KnowledgeConfig, KnowledgeSourceConfig, RunConfig,
};
use featforge::pools::{FeaturePool, TestPool};
use featforge::report;

#[derive(Parser)]
#[command(
    name = "featforge",
    version,
    about = "Agent-driven feature extraction for tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the extraction loop on a CSV dataset.
    Run(Box<RunArgs>),
    /// Mean reciprocal rank per method over a published score table.
    AnalyzeMrr(MrrArgs),
    /// Pearson correlation over an x,y point file.
    AnalyzePearson(PearsonArgs),
    /// Regenerate the report for a finished run directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Input CSV (header row, empty cells are missing values).
    #[arg(long)]
    data: PathBuf,
    /// Name of the target column.
    #[arg(long)]
    target: String,
    /// Task kind: classification or regression.
    #[arg(long)]
    task: String,
    /// Loop iterations after the baseline.
    #[arg(long, default_value_t = 10)]
    iters: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Backend: scripted or remote.
    #[arg(long, default_value = "scripted")]
    backend: String,
    /// Chat-completions URL for the remote backend.
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name for the remote backend.
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the endpoint credential.
    #[arg(long)]
    credentials_env: Option<String>,
    /// Directory of .txt documents used as the knowledge corpus for all roles.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory for run artifacts.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 8)]
    flood_target: usize,
    #[arg(long, default_value_t = 0.95)]
    prune_threshold: f64,
    #[arg(long, default_value_t = 0.001)]
    importance_floor: f64,
}

#[derive(Args)]
struct MrrArgs {
    /// Score table CSV: header dataset,n,p,<method>...
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    higher_is_better: bool,
    /// Tie handling: min-rank or average-rank.
    #[arg(long, default_value = "min-rank")]
    tie_rule: String,
}

#[derive(Args)]
struct PearsonArgs {
    /// Point CSV with header x,y.
    #[arg(long)]
    points: PathBuf,
    /// Take the natural log of x before correlating.
    #[arg(long)]
    log_x: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    run_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(*args),
        Command::AnalyzeMrr(args) => cmd_mrr(args),
        Command::AnalyzePearson(args) => cmd_pearson(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn runtime<E: std::fmt::Display>(err: E) -> CliError {
    CliError::Runtime(err.to_string())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let task = match args.task.as_str() {
        "classification" => TaskKind::Classification,
        "regression" => TaskKind::Regression,
        other => {
            return Err(CliError::Usage(format!(
                "unknown task '{other}' (want classification or regression)"
            )))
        }
    };
    let backend = match args.backend.as_str() {
        "scripted" => BackendConfig::Scripted,
        "remote" => {
            let endpoint = args
                .endpoint
                .ok_or_else(|| CliError::Usage("remote backend requires --endpoint".into()))?;
            let model = args
                .model
                .ok_or_else(|| CliError::Usage("remote backend requires --model".into()))?;
            BackendConfig::Remote {
                endpoint,
                model,
                credentials_env: args.credentials_env,
                timeout_secs: 60,
                retries: 2,
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown backend '{other}' (want scripted or remote)"
            )))
        }
    };

    let dataset = load_csv(&args.data, None, &args.target, task).map_err(runtime)?;
    let mut config = RunConfig::scripted_defaults(task, args.seed);
    config.iterations = args.iters;
    config.folds = args.folds;
    config.flood_target = args.flood_target;
    config.prune_threshold = args.prune_threshold;
    config.importance_floor = args.importance_floor;
    config.backend = backend;
    if let Some(corpus) = args.corpus {
        let source = KnowledgeSourceConfig::CorpusDir { path: corpus };
        config.knowledge = KnowledgeConfig {
            scientist: source.clone(),
            extractor: source.clone(),
            tester: source,
        };
    }

    let result = orchestrator::run(&config, &dataset, &args.out).map_err(runtime)?;
    println!(
        "best iteration {} with {} = {:.5} over {} evaluated iteration(s)",
        result.best_iteration,
        result.metric_name,
        result.best_metric,
        result.trajectory.len()
    );
    println!(
        "{} active feature(s) in the best set; artifacts in {}",
        result.best_active_features.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_mrr(args: MrrArgs) -> Result<(), CliError> {
    let tie = TieRule::parse(&args.tie_rule).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown tie rule '{}' (want min-rank or average-rank)",
            args.tie_rule
        ))
    })?;
    let table = analysis::parse_score_table(&args.table, args.higher_is_better).map_err(runtime)?;
    let result = analysis::mrr(&table, tie).map_err(runtime)?;
    println!("method,mrr");
    for method in &table.methods {
        if let Some(value) = result.get(method) {
            println!("{method},{value:.4}");
        }
    }
    Ok(())
}

fn cmd_pearson(args: PearsonArgs) -> Result<(), CliError> {
    let points = analysis::parse_points(&args.points).map_err(runtime)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let xs = if args.log_x {
        if let Some(bad) = xs.iter().find(|x| **x <= 0.0) {
            return Err(CliError::Runtime(format!(
                "--log-x requires positive x values, found {bad}"
            )));
        }
        xs.into_iter().map(f64::ln).collect()
    } else {
        xs
    };
    let rho = analysis::pearson(&xs, &ys).map_err(runtime)?;
    println!("rho = {rho:.6}");
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let dir: &Path = &args.run_dir;
    let config: RunConfig =
        serde_json::from_str(&std::fs::read_to_string(dir.join("config.json")).map_err(runtime)?)
            .map_err(runtime)?;
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("run_meta.json")).map_err(runtime)?)
            .map_err(runtime)?;
    let feature_pool = FeaturePool::restore(&dir.join("feature_pool.json")).map_err(runtime)?;
    let test_pool = TestPool::restore(&dir.join("test_pool.json")).map_err(runtime)?;
    let (best_iteration, best_metric) =
        orchestrator::select_best(&test_pool, config.metric.higher_is_better).map_err(runtime)?;
    let result = featforge::RunResult {
        dataset_name: meta["dataset_name"]
            .as_str()
            .unwrap_or("dataset")
            .to_string(),
        best_iteration,
        best_metric,
        best_active_features: feature_pool
            .active_at(best_iteration)
            .into_iter()
            .map(|r| r.transformation.clone())
            .collect(),
        trajectory: test_pool.trajectory(),
        transcript_path: dir.join("transcript.jsonl"),
        feature_pool,
        test_pool,
        metric_name: config.metric.metric.name().to_string(),
        higher_is_better: config.metric.higher_is_better,
    };
    let path = dir.join("report.md");
    report::emit_report(&result, &path).map_err(runtime)?;
    let text = std::fs::read_to_string(&path).map_err(runtime)?;
    print!("{text}");
    Ok(())
}
