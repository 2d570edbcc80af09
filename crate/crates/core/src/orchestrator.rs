//! Drives the iteration loop: seed the pool with raw-attribute features,
//! evaluate the baseline, then cycle scientist -> extractor -> tester,
//! applying prunes and recording every evaluated iteration. All randomness
//! is derived from the run seed per component and iteration, so scripted
//! runs are byte-reproducible end to end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::episodes::{
    run_extractor, run_scientist, run_tester, EpisodeError, PrunePolicy,
};
use crate::agents::prompts::{PromptSet, Role};
use crate::agents::remote::RemoteBackend;
use crate::agents::scripted::{ScriptedExtractor, ScriptedScientist, ScriptedTester};
use crate::agents::{AgentBackend, FocusArea, FocusScope, ScratchPad};
use crate::dataset::{kfold_split, Dataset, DatasetError, FoldPlan, TaskKind};
use crate::dsl::Transformation;
use crate::knowledge::{Corpus, KnowledgeError, KnowledgeSource};
use crate::learner::{LearnerError, LearnerParams, Loss, Metric};
use crate::pools::{FeaturePool, PoolError, TestPool};
use crate::rng::derive_seed;
use crate::transcript::{EventKind, Transcript, TranscriptError, TranscriptEvent};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid run configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("no test records were produced")]
    EmptyTestPool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Scripted,
    Remote {
        endpoint: String,
        model: String,
        /// Environment variable holding the API key, if the endpoint needs one.
        credentials_env: Option<String>,
        timeout_secs: u64,
        retries: usize,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KnowledgeSourceConfig {
    #[default]
    None,
    CorpusDir {
        path: PathBuf,
    },
    CorpusFile {
        path: PathBuf,
    },
    WebStub {
        fixture: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct KnowledgeConfig {
    pub scientist: KnowledgeSourceConfig,
    pub extractor: KnowledgeSourceConfig,
    pub tester: KnowledgeSourceConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricConfig {
    pub metric: Metric,
    pub higher_is_better: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Budgets {
    pub scientist: usize,
    pub extractor: usize,
    pub tester: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            scientist: 8,
            extractor: 64,
            tester: 8,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PromptOverrides {
    pub scientist: Option<PathBuf>,
    pub extractor: Option<PathBuf>,
    pub tester: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub iterations: u64,
    pub seed: u64,
    pub learner: LearnerParams,
    pub folds: usize,
    pub flood_target: usize,
    pub prune_threshold: f64,
    pub importance_floor: f64,
    pub backend: BackendConfig,
    #[serde(default)]
    pub knowledge: KnowledgeConfig,
    pub metric: MetricConfig,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub prompt_overrides: PromptOverrides,
}

impl RunConfig {
    /// Scripted defaults for a task: 10 iterations, 5 folds, metric and loss
    /// matching the task kind.
    pub fn scripted_defaults(task: TaskKind, seed: u64) -> RunConfig {
        let (metric, loss, higher) = match task {
            TaskKind::Classification => (Metric::Accuracy, Loss::Logistic, true),
            TaskKind::Regression => (Metric::Nrmse, Loss::Squared, false),
        };
        RunConfig {
            iterations: 10,
            seed,
            learner: LearnerParams {
                loss,
                seed,
                ..Default::default()
            },
            folds: 5,
            flood_target: 8,
            prune_threshold: 0.95,
            importance_floor: 0.001,
            backend: BackendConfig::Scripted,
            knowledge: KnowledgeConfig::default(),
            metric: MetricConfig {
                metric,
                higher_is_better: higher,
            },
            budgets: Budgets::default(),
            prompt_overrides: PromptOverrides::default(),
        }
    }

    fn validate(&self, dataset: &Dataset) -> Result<(), RunError> {
        if self.iterations < 1 {
            return Err(RunError::BadConfig("iterations must be >= 1".into()));
        }
        if self.folds < 2 {
            return Err(RunError::BadConfig("folds must be >= 2".into()));
        }
        if self.flood_target < 1 {
            return Err(RunError::BadConfig("flood_target must be >= 1".into()));
        }
        if !(self.prune_threshold > 0.0 && self.prune_threshold <= 1.0) {
            return Err(RunError::BadConfig(
                "prune_threshold must be in (0, 1]".into(),
            ));
        }
        let task = dataset.task();
        match (task, self.metric.metric) {
            (TaskKind::Classification, Metric::Nrmse) => {
                return Err(RunError::BadConfig(
                    "nrmse metric needs a regression target".into(),
                ))
            }
            (TaskKind::Regression, Metric::Accuracy) => {
                return Err(RunError::BadConfig(
                    "accuracy metric needs a classification target".into(),
                ))
            }
            _ => {}
        }
        match (task, self.learner.loss) {
            (TaskKind::Classification, Loss::Squared) => {
                return Err(RunError::BadConfig(
                    "classification targets need logistic loss".into(),
                ))
            }
            (TaskKind::Regression, Loss::Logistic) => {
                return Err(RunError::BadConfig(
                    "regression targets need squared loss".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct RunResult {
    pub dataset_name: String,
    pub best_iteration: u64,
    pub best_metric: f64,
    pub best_active_features: Vec<Transformation>,
    pub trajectory: Vec<(u64, f64, usize)>,
    pub transcript_path: PathBuf,
    pub feature_pool: FeaturePool,
    pub test_pool: TestPool,
    pub metric_name: String,
    pub higher_is_better: bool,
}

/// The optimum test record under the metric direction; ties go to the
/// earliest iteration.
pub fn select_best(test_pool: &TestPool, higher_is_better: bool) -> Result<(u64, f64), RunError> {
    let mut best: Option<(u64, f64)> = None;
    for record in test_pool.records() {
        let better = match best {
            None => true,
            Some((_, current)) => {
                if higher_is_better {
                    record.metric.mean > current
                } else {
                    record.metric.mean < current
                }
            }
        };
        if better {
            best = Some((record.iteration, record.metric.mean));
        }
    }
    best.ok_or(RunError::EmptyTestPool)
}

fn load_source(config: &KnowledgeSourceConfig) -> Result<Option<KnowledgeSource>, RunError> {
    Ok(match config {
        KnowledgeSourceConfig::None => None,
        KnowledgeSourceConfig::CorpusDir { path } => {
            Some(KnowledgeSource::Corpus(Corpus::from_dir(path)?))
        }
        KnowledgeSourceConfig::CorpusFile { path } => {
            Some(KnowledgeSource::Corpus(Corpus::from_json_file(path)?))
        }
        KnowledgeSourceConfig::WebStub { fixture } => Some(KnowledgeSource::WebStub(
            fixture
                .as_ref()
                .map(|p| Corpus::from_json_file(p))
                .transpose()?,
        )),
    })
}

fn make_backend(
    config: &BackendConfig,
    role: Role,
    iteration: u64,
    flood_target: usize,
) -> Result<Box<dyn AgentBackend>, RunError> {
    Ok(match config {
        BackendConfig::Scripted => match role {
            Role::Scientist => Box::new(ScriptedScientist::new(iteration)),
            Role::Extractor => Box::new(ScriptedExtractor::new(flood_target)),
            Role::Tester => Box::new(ScriptedTester::new()),
        },
        BackendConfig::Remote {
            endpoint,
            model,
            credentials_env,
            timeout_secs,
            retries,
        } => {
            let api_key = match credentials_env {
                None => None,
                Some(var) => Some(std::env::var(var).map_err(|_| {
                    RunError::BadConfig(format!("credentials variable '{var}' is not set"))
                })?),
            };
            Box::new(
                RemoteBackend::new(
                    endpoint.clone(),
                    model.clone(),
                    api_key,
                    std::time::Duration::from_secs(*timeout_secs),
                    *retries,
                )
                .map_err(EpisodeError::Agent)?,
            )
        }
    })
}

/// Knowledge lookups run through their own backend instance so an episode's
/// conversation state never mixes with retrieval summarization.
fn knowledge_backend(config: &BackendConfig) -> Result<Option<Box<dyn AgentBackend>>, RunError> {
    Ok(match config {
        BackendConfig::Scripted => None,
        remote => Some(make_backend(remote, Role::Scientist, 0, 1)?),
    })
}

const MAX_SEED_CATEGORIES: usize = 12;

/// Iteration-0 seeding: one identity feature per numeric column and one flag
/// per category (top 12 by frequency for wide columns) so raw attributes are
/// evaluable before any extraction.
pub fn seed_transformations(dataset: &Dataset) -> Vec<Transformation> {
    use crate::dataset::{ColumnStats, ColumnValues};
    let summary = crate::dataset::describe(dataset);
    let mut out: Vec<Transformation> = Vec::new();
    let mut names: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for (col, cs) in dataset.columns.iter().zip(&summary.columns) {
        match &col.values {
            ColumnValues::Numeric(_) => {
                if names.insert(col.name.clone()) {
                    out.push(
                        Transformation::new(
                            col.name.clone(),
                            &col.name,
                            format!("Baseline signal of raw attribute '{}'", col.name),
                            format!("Raw column {} passed through unchanged", col.name),
                            0,
                            dataset,
                        )
                        .expect("identity features validate"),
                    );
                }
            }
            ColumnValues::Categorical(_) => {
                let ColumnStats::Categorical { .. } = &cs.stats else {
                    continue;
                };
                // describe() caps its top list at 5; recount for seeding.
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                if let ColumnValues::Categorical(vals) = &col.values {
                    for v in vals.iter().flatten() {
                        *counts.entry(v.as_str()).or_default() += 1;
                    }
                }
                let mut table: Vec<(&str, usize)> = counts.into_iter().collect();
                table.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
                for (token, _) in table.into_iter().take(MAX_SEED_CATEGORIES) {
                    let sanitized: String = token
                        .chars()
                        .map(|c| {
                            if c.is_ascii_alphanumeric() || c == '_' {
                                c
                            } else {
                                '_'
                            }
                        })
                        .collect();
                    let name = format!("{}_is_{sanitized}", col.name);
                    if !crate::dsl::is_valid_name(&name) || !names.insert(name.clone()) {
                        continue;
                    }
                    let expr = crate::dsl::Expr::CatFlag(col.name.clone(), token.to_string());
                    out.push(
                        Transformation::new(
                            name,
                            &crate::dsl::format(&expr),
                            format!("Baseline flag for category '{token}' of '{}'", col.name),
                            format!("1 when {} equals \"{token}\", else 0", col.name),
                            0,
                            dataset,
                        )
                        .expect("flag features validate"),
                    );
                }
            }
        }
    }
    out
}

struct RunState {
    feature_pool: FeaturePool,
    test_pool: TestPool,
    transcript: Transcript,
    pads: BTreeMap<&'static str, ScratchPad>,
}

impl RunState {
    fn persist(&self, out_dir: &Path) -> Result<(), RunError> {
        self.feature_pool
            .persist(&out_dir.join("feature_pool.json"))?;
        self.test_pool.persist(&out_dir.join("test_pool.json"))?;
        self.transcript.save(&out_dir.join("transcript.jsonl"))?;
        let pad_dir = out_dir.join("scratchpads");
        std::fs::create_dir_all(&pad_dir).map_err(|source| RunError::Io {
            path: pad_dir.display().to_string(),
            source,
        })?;
        for (role, pad) in &self.pads {
            let path = pad_dir.join(format!("{role}.txt"));
            std::fs::write(&path, pad.render()).map_err(|source| RunError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }
}

/// Runs the full loop and writes the run directory: config snapshot, pool
/// and test-pool files, transcript, scratch pads, trajectory CSV, and the
/// final report. On an unrecoverable error the partial artifacts are
/// persisted before the error propagates.
pub fn run(config: &RunConfig, dataset: &Dataset, out_dir: &Path) -> Result<RunResult, RunError> {
    config.validate(dataset)?;
    std::fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let config_json = serde_json::to_string_pretty(config).expect("config serializes");
    let config_path = out_dir.join("config.json");
    std::fs::write(&config_path, config_json + "\n").map_err(|source| RunError::Io {
        path: config_path.display().to_string(),
        source,
    })?;
    let meta = serde_json::json!({
        "dataset_name": dataset.name,
        "target": dataset.target.name,
        "n_rows": dataset.n_rows,
        "task": dataset.task(),
    });
    let meta_path = out_dir.join("run_meta.json");
    std::fs::write(
        &meta_path,
        serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n",
    )
    .map_err(|source| RunError::Io {
        path: meta_path.display().to_string(),
        source,
    })?;

    let mut prompts = PromptSet::default();
    for (role, path) in [
        (Role::Scientist, &config.prompt_overrides.scientist),
        (Role::Extractor, &config.prompt_overrides.extractor),
        (Role::Tester, &config.prompt_overrides.tester),
    ] {
        if let Some(path) = path {
            prompts
                .override_from_file(role, path)
                .map_err(|source| RunError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
        }
    }

    let sources = Sources {
        scientist: load_source(&config.knowledge.scientist)?,
        extractor: load_source(&config.knowledge.extractor)?,
        tester: load_source(&config.knowledge.tester)?,
    };
    let foldplan = kfold_split(
        dataset.n_rows,
        config.folds,
        derive_seed(config.seed, "folds", 0),
    )?;

    let mut state = RunState {
        feature_pool: FeaturePool::new(),
        test_pool: TestPool::new(),
        transcript: Transcript::new(),
        pads: BTreeMap::from([
            ("scientist", ScratchPad::new("scientist")),
            ("extractor", ScratchPad::new("extractor")),
            ("tester", ScratchPad::new("tester")),
        ]),
    };

    let loop_result = run_loop(config, dataset, &prompts, &sources, &foldplan, &mut state);
    // Persist whatever exists, success or not.
    state.persist(out_dir)?;
    loop_result?;

    let (best_iteration, best_metric) =
        select_best(&state.test_pool, config.metric.higher_is_better)?;
    let best_active_features: Vec<Transformation> = state
        .feature_pool
        .active_at(best_iteration)
        .into_iter()
        .map(|r| r.transformation.clone())
        .collect();
    let metric_name = config.metric.metric.name().to_string();
    let result = RunResult {
        dataset_name: dataset.name.clone(),
        best_iteration,
        best_metric,
        best_active_features,
        trajectory: state.test_pool.trajectory(),
        transcript_path: out_dir.join("transcript.jsonl"),
        feature_pool: state.feature_pool,
        test_pool: state.test_pool,
        metric_name,
        higher_is_better: config.metric.higher_is_better,
    };
    crate::report::emit_trajectory(&result, &out_dir.join("trajectory.csv")).map_err(|source| {
        RunError::Io {
            path: out_dir.join("trajectory.csv").display().to_string(),
            source,
        }
    })?;
    crate::report::emit_report(&result, &out_dir.join("report.md")).map_err(|source| {
        RunError::Io {
            path: out_dir.join("report.md").display().to_string(),
            source,
        }
    })?;
    Ok(result)
}

struct Sources {
    scientist: Option<KnowledgeSource>,
    extractor: Option<KnowledgeSource>,
    tester: Option<KnowledgeSource>,
}

fn run_loop(
    config: &RunConfig,
    dataset: &Dataset,
    prompts: &PromptSet,
    sources: &Sources,
    foldplan: &FoldPlan,
    state: &mut RunState,
) -> Result<(), RunError> {
    let policy = PrunePolicy {
        threshold: config.prune_threshold,
        importance_floor: config.importance_floor,
    };

    // Iteration 0: seed raw-attribute features through logged mutations,
    // then evaluate the baseline.
    let seeds = seed_transformations(dataset);
    for t in &seeds {
        state.transcript.push(TranscriptEvent {
            iteration: 0,
            agent: "orchestrator".into(),
            step: 0,
            kind: EventKind::ToolCall {
                name: "append_new_attribute".into(),
                arguments: serde_json::json!({
                    "name": t.name,
                    "dsl_source": t.source_text,
                    "justification": t.justification,
                    "explanation": t.explanation,
                }),
            },
        });
        state.transcript.push(TranscriptEvent {
            iteration: 0,
            agent: "orchestrator".into(),
            step: 0,
            kind: EventKind::ToolResult {
                name: "append_new_attribute".into(),
                content: serde_json::json!({
                    "accepted": true,
                    "name": t.name,
                    "canonical": t.source_text,
                })
                .to_string(),
            },
        });
    }
    state.feature_pool.append_features(seeds, 0, dataset)?;

    let baseline_focus = FocusArea {
        text: "seed raw attributes as the evaluation baseline".into(),
        scope: FocusScope::Exploratory,
        iteration: 0,
    };
    run_evaluation(
        config,
        dataset,
        prompts,
        sources,
        foldplan,
        state,
        0,
        &baseline_focus,
        policy,
    )?;

    for iteration in 1..=config.iterations {
        let mut scientist = make_backend(
            &config.backend,
            Role::Scientist,
            iteration,
            config.flood_target,
        )?;
        let pad = state.pads.get_mut("scientist").expect("pad exists");
        let focus = run_scientist(
            &state.test_pool,
            &state.feature_pool,
            dataset,
            scientist.as_mut(),
            sources.scientist.as_ref(),
            knowledge_backend(&config.backend)?,
            config.budgets.scientist,
            prompts,
            iteration,
            config.iterations,
            pad,
            &mut state.transcript,
        )?;

        let mut extractor = make_backend(
            &config.backend,
            Role::Extractor,
            iteration,
            config.flood_target,
        )?;
        let pad = state.pads.get_mut("extractor").expect("pad exists");
        let accepted = run_extractor(
            &focus,
            dataset,
            &state.feature_pool,
            extractor.as_mut(),
            sources.extractor.as_ref(),
            knowledge_backend(&config.backend)?,
            config.budgets.extractor,
            config.flood_target,
            prompts,
            iteration,
            pad,
            &mut state.transcript,
        )?;
        if accepted.is_empty() {
            // Nothing new to evaluate; the iteration leaves no test record.
            continue;
        }
        state
            .feature_pool
            .append_features(accepted, iteration, dataset)?;
        run_evaluation(
            config, dataset, prompts, sources, foldplan, state, iteration, &focus, policy,
        )?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_evaluation(
    config: &RunConfig,
    dataset: &Dataset,
    prompts: &PromptSet,
    sources: &Sources,
    foldplan: &FoldPlan,
    state: &mut RunState,
    iteration: u64,
    focus: &FocusArea,
    policy: PrunePolicy,
) -> Result<(), RunError> {
    let mut tester = make_backend(
        &config.backend,
        Role::Tester,
        iteration,
        config.flood_target,
    )?;
    let pad = state.pads.get_mut("tester").expect("pad exists");
    let output = run_tester(
        &state.feature_pool,
        dataset,
        &config.learner,
        foldplan,
        tester.as_mut(),
        sources.tester.as_ref(),
        knowledge_backend(&config.backend)?,
        config.budgets.tester,
        policy,
        config.metric.metric,
        prompts,
        iteration,
        focus,
        derive_seed(config.seed, "tester", iteration),
        pad,
        &mut state.transcript,
    )?;
    if !output.pruned.is_empty() {
        let names: Vec<String> = output.pruned.iter().map(|(n, _)| n.clone()).collect();
        let reasons: BTreeMap<String, String> = output.pruned.iter().cloned().collect();
        state.feature_pool.prune(&names, iteration, &reasons)?;
    }
    state.test_pool.append(output.record)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pools::{MetricSummary, TestRecord};

    fn record(iteration: u64, mean: f64) -> TestRecord {
        TestRecord {
            iteration,
            metric: MetricSummary {
                name: "nrmse".into(),
                mean,
                std: 0.0,
            },
            assessment_markdown: String::new(),
            pruned_names: vec![],
            active_count_after: 1,
            focus: FocusArea {
                text: "f".into(),
                scope: FocusScope::Exploratory,
                iteration,
            },
        }
    }

    #[test]
    fn select_best_lower_is_better_matches_plotted_series() {
        let mut pool = TestPool::new();
        let metrics = [
            0.19636, 0.19546, 0.17179, 0.16819, 0.16512, 0.16058, 0.16068,
        ];
        let iters = [1u64, 2, 3, 4, 7, 8, 9];
        for (it, m) in iters.iter().zip(metrics.iter()) {
            pool.append(record(*it, *m)).unwrap();
        }
        let (best_iter, best) = select_best(&pool, false).unwrap();
        assert_eq!(best_iter, 8);
        assert_eq!(best, 0.16058);
    }

    #[test]
    fn select_best_single_record_and_ties() {
        let mut pool = TestPool::new();
        pool.append(record(3, 0.5)).unwrap();
        assert_eq!(select_best(&pool, false).unwrap(), (3, 0.5));
        pool.append(record(5, 0.5)).unwrap();
        // Tie goes to the earliest iteration.
        assert_eq!(select_best(&pool, false).unwrap(), (3, 0.5));
        assert!(matches!(
            select_best(&TestPool::new(), false),
            Err(RunError::EmptyTestPool)
        ));
    }

    #[test]
    fn seeding_covers_numeric_and_categorical() {
        use crate::dataset::*;
        let ds = Dataset::new(
            "seedtest",
            vec![
                Column {
                    name: "x".into(),
                    values: ColumnValues::Numeric(vec![Some(1.0), Some(2.0), Some(3.0)]),
                },
                Column {
                    name: "c".into(),
                    values: ColumnValues::Categorical(vec![
                        Some("red".into()),
                        Some("red".into()),
                        Some("blue".into()),
                    ]),
                },
            ],
            TargetColumn {
                name: "y".into(),
                values: TargetValues::Numeric(vec![0.0, 1.0, 2.0]),
            },
            DatasetDescription {
                task_line: "t".into(),
                goal_line: "g".into(),
                attribute_lines: Default::default(),
            },
        )
        .unwrap();
        let seeds = seed_transformations(&ds);
        let names: Vec<&str> = seeds.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, vec!["x", "c_is_red", "c_is_blue"]);
    }

    #[test]
    fn seeding_caps_wide_categoricals() {
        use crate::dataset::*;
        let values: Vec<Option<String>> = (0..40).map(|i| Some(format!("t{}", i % 20))).collect();
        let ds = Dataset::new(
            "wide",
            vec![Column {
                name: "c".into(),
                values: ColumnValues::Categorical(values),
            }],
            TargetColumn {
                name: "y".into(),
                values: TargetValues::Numeric((0..40).map(|i| i as f64).collect()),
            },
            DatasetDescription {
                task_line: "t".into(),
                goal_line: "g".into(),
                attribute_lines: Default::default(),
            },
        )
        .unwrap();
        let seeds = seed_transformations(&ds);
        assert_eq!(seeds.len(), MAX_SEED_CATEGORIES);
    }
}
