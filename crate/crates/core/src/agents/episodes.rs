//! The three agent episodes. Each assembles its system prompt from the
//! template set, hands the backend a tool host, and converts the episode's
//! outcome into the loop's currency: a focus area, a batch of accepted
//! transformations, or a test record plus prune decisions.

use std::collections::BTreeMap;

use serde_json::json;

use crate::dataset::{Dataset, FoldPlan};
use crate::dsl::Transformation;
use crate::knowledge::KnowledgeSource;
use crate::learner::{
    correlation_matrix, cross_validate, noise_robustness, permutation_importance, EvalReport,
    LearnerError, LearnerParams, Metric, Targets,
};
use crate::pools::{FeaturePool, MetricSummary, TestPool, TestRecord};
use crate::rng::derive_seed;
use crate::transcript::Transcript;

use super::prompts::{PromptSet, Role};
use super::tools::{run_episode, ExtractorHost, ScientistHost, TesterHost};
use super::{AgentBackend, AgentError, FocusArea, FocusScope, ScratchPad};

pub const NOISE_SIGMA: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// Correlation and importance limits the tester enforces.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrunePolicy {
    pub threshold: f64,
    pub importance_floor: f64,
}

impl Default for PrunePolicy {
    fn default() -> Self {
        PrunePolicy {
            threshold: 0.95,
            importance_floor: 0.001,
        }
    }
}

/// Runs the scientist: reads the test pool through its tools and answers
/// with the next Focus Area. A budget exhausted without a final answer falls
/// back to a wildcard exploratory focus so the loop never stalls.
#[allow(clippy::too_many_arguments)]
pub fn run_scientist(
    test_pool: &TestPool,
    feature_pool: &FeaturePool,
    dataset: &Dataset,
    backend: &mut dyn AgentBackend,
    knowledge: Option<&KnowledgeSource>,
    knowledge_backend: Option<Box<dyn AgentBackend>>,
    budget: usize,
    prompts: &PromptSet,
    iteration: u64,
    total_iterations: u64,
    pad: &mut ScratchPad,
    transcript: &mut Transcript,
) -> Result<FocusArea, EpisodeError> {
    let system = prompts.render(Role::Scientist, dataset);
    let user = format!(
        "This is iteration {iteration} of {total_iterations}. Review the cumulative test \
         results and set the Focus Area for the next extraction round."
    );
    let mut host = ScientistHost {
        dataset,
        feature_pool,
        test_pool,
        knowledge,
        knowledge_backend,
        pad,
        iteration,
    };
    let outcome = run_episode(
        backend,
        &mut host,
        &system,
        user,
        budget,
        iteration,
        Role::Scientist.name(),
        transcript,
    )?;
    Ok(match outcome.final_text {
        Some(text) => FocusArea::parse(&text, iteration),
        None => FocusArea {
            text: "explore general derived features over all numeric columns".into(),
            scope: FocusScope::Exploratory,
            iteration,
        },
    })
}

/// Runs the extractor: a discovery phase over the table tool, then an
/// extraction phase where every accepted `append_new_attribute` call stages
/// one transformation. Zero accepted features is a legal outcome.
#[allow(clippy::too_many_arguments)]
pub fn run_extractor(
    focus: &FocusArea,
    dataset: &Dataset,
    feature_pool: &FeaturePool,
    backend: &mut dyn AgentBackend,
    knowledge: Option<&KnowledgeSource>,
    knowledge_backend: Option<Box<dyn AgentBackend>>,
    budget: usize,
    flood_target: usize,
    prompts: &PromptSet,
    iteration: u64,
    pad: &mut ScratchPad,
    transcript: &mut Transcript,
) -> Result<Vec<Transformation>, EpisodeError> {
    if flood_target == 0 {
        return Err(AgentError::ZeroFloodTarget.into());
    }
    let system = prompts.render(Role::Extractor, dataset);
    let user = format!(
        "Focus Area ({}): {}\n\nPropose up to {flood_target} new attributes with the \
         append_new_attribute tool. Definitions use the transformation DSL over raw columns.",
        focus.scope, focus.text
    );
    let mut host = ExtractorHost {
        dataset,
        feature_pool,
        knowledge,
        knowledge_backend,
        pad,
        iteration,
        pending: Vec::new(),
        cap: flood_target * 4,
    };
    run_episode(
        backend,
        &mut host,
        &system,
        user,
        budget,
        iteration,
        Role::Extractor.name(),
        transcript,
    )?;
    Ok(host.pending)
}

#[derive(Debug)]
pub struct TesterOutput {
    pub record: TestRecord,
    /// `(name, reason)` in pool order; the orchestrator applies these.
    pub pruned: Vec<(String, String)>,
    pub report: EvalReport,
}

/// Runs the tester: computes the full quantitative report, hands the backend
/// the evidence, lets it stage prunes through the pruning tool, and emits the
/// feature assessment document.
#[allow(clippy::too_many_arguments)]
pub fn run_tester(
    feature_pool: &FeaturePool,
    dataset: &Dataset,
    learner_params: &LearnerParams,
    foldplan: &FoldPlan,
    backend: &mut dyn AgentBackend,
    knowledge: Option<&KnowledgeSource>,
    knowledge_backend: Option<Box<dyn AgentBackend>>,
    budget: usize,
    policy: PrunePolicy,
    metric: Metric,
    prompts: &PromptSet,
    iteration: u64,
    focus: &FocusArea,
    seed: u64,
    pad: &mut ScratchPad,
    transcript: &mut Transcript,
) -> Result<TesterOutput, EpisodeError> {
    let matrix = feature_pool.active_matrix(dataset);
    let targets = Targets::from_target(&dataset.target);
    let mut report = cross_validate(&matrix, &targets, foldplan, learner_params, metric)?;
    report.permutation_importance = permutation_importance(
        &matrix,
        &targets,
        foldplan,
        learner_params,
        metric,
        derive_seed(seed, "tester-perm", iteration),
    )?;
    report.correlation = correlation_matrix(&matrix);
    report.robustness_delta = Some(noise_robustness(
        &matrix,
        &targets,
        foldplan,
        learner_params,
        metric,
        NOISE_SIGMA,
        derive_seed(seed, "tester-noise", iteration),
    )?);

    let actives: Vec<&crate::pools::FeatureRecord> = feature_pool.active().collect();
    let protected = actives
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            let ga = report.gain_importance.get(a.name()).copied().unwrap_or(0.0);
            let gb = report.gain_importance.get(b.name()).copied().unwrap_or(0.0);
            ga.partial_cmp(&gb)
                .unwrap()
                .then_with(|| b.created_iter.cmp(&a.created_iter))
                .then_with(|| ib.cmp(ia))
        })
        .map(|(_, r)| r.name().to_string())
        .unwrap_or_default();

    let pairs: Vec<serde_json::Value> = report
        .correlation
        .pairs_above(policy.threshold)
        .into_iter()
        .map(|(a, b, r)| json!({ "a": a, "b": b, "r": r }))
        .collect();
    let created: BTreeMap<&str, u64> = actives.iter().map(|r| (r.name(), r.created_iter)).collect();
    let active_order: Vec<&str> = actives.iter().map(|r| r.name()).collect();
    let evidence = json!({
        "metric": {
            "name": report.metric_name,
            "mean": report.mean,
            "std": report.std,
            "per_fold": report.per_fold_metrics,
        },
        "gain": report.gain_importance,
        "permutation": report.permutation_importance,
        "high_corr_pairs": pairs,
        "created_iter": created,
        "active_order": active_order,
        "prune_threshold": policy.threshold,
        "importance_floor": policy.importance_floor,
        "robustness_delta": report.robustness_delta,
        "degenerate_normalizer": report.degenerate_normalizer,
    });
    let user = format!(
        "Evaluation evidence for iteration {iteration} over {} active feature(s).\n\n\
         ```json\n{}\n```\n\nDecide which features to prune with the \
         attribute_pruning_tool, then summarize your findings.",
        matrix.n_cols(),
        serde_json::to_string_pretty(&evidence).expect("evidence serializes"),
    );

    let system = prompts.render(Role::Tester, dataset);
    let mut host = TesterHost {
        feature_pool,
        knowledge,
        knowledge_backend,
        pad,
        iteration,
        staged: Vec::new(),
        protected,
    };
    let outcome = run_episode(
        backend,
        &mut host,
        &system,
        user,
        budget,
        iteration,
        Role::Tester.name(),
        transcript,
    )?;
    let staged = host.staged;
    let assessment = compose_assessment(
        iteration,
        learner_params,
        foldplan.k,
        &report,
        &staged,
        feature_pool,
        policy.threshold,
        outcome.final_text.as_deref(),
    );
    let record = TestRecord {
        iteration,
        metric: MetricSummary {
            name: report.metric_name.clone(),
            mean: report.mean,
            std: report.std,
        },
        assessment_markdown: assessment,
        pruned_names: staged.iter().map(|(n, _)| n.clone()).collect(),
        active_count_after: feature_pool.active_count() - staged.len(),
        focus: focus.clone(),
    };
    Ok(TesterOutput {
        record,
        pruned: staged,
        report,
    })
}

/// Renders the feature assessment document with the fixed section skeleton:
/// baseline, redundancy, pruning passes, post-pruning importance, robustness,
/// conclusions. All numbers use fixed-width formatting so a scripted run's
/// reports are byte-stable.
#[allow(clippy::too_many_arguments)]
fn compose_assessment(
    iteration: u64,
    params: &LearnerParams,
    folds: usize,
    report: &EvalReport,
    staged: &[(String, String)],
    pool: &FeaturePool,
    threshold: f64,
    final_text: Option<&str>,
) -> String {
    let mut out = String::new();
    let active_count = pool.active_count();
    out.push_str(&format!(
        "**Tester Agent Report - Feature Evaluation (iteration {iteration})**\n\n---\n\n"
    ));

    out.push_str("### 1. Baseline Assessment\n");
    out.push_str(&format!(
        "- **Model:** gradient-boosted trees ({} trees, max depth {}, learning rate {})\n",
        params.n_trees, params.max_depth, params.learning_rate
    ));
    out.push_str(&format!(
        "- **Feature Set:** {active_count} active attributes\n"
    ));
    out.push_str(&format!(
        "- **Performance:** mean {} **{:.5}** (std {:.5}) over {folds}-fold validation\n",
        report.metric_name, report.mean, report.std
    ));
    let folds_fmt: Vec<String> = report
        .per_fold_metrics
        .iter()
        .map(|v| format!("{v:.5}"))
        .collect();
    out.push_str(&format!(
        "- Per-fold {}: {}\n",
        report.metric_name,
        folds_fmt.join(", ")
    ));
    if report.degenerate_normalizer {
        out.push_str("- Note: a zero-variance fold reported its RMSE unnormalized.\n");
    }
    out.push('\n');

    out.push_str("### 2. Redundancy & Correlation Analysis\n");
    out.push_str("- Computed absolute pairwise correlations across all active features.\n");
    let pairs = report.correlation.pairs_above(threshold);
    if pairs.is_empty() {
        out.push_str(&format!("- No pair exceeded |r| > {threshold}.\n"));
    } else {
        out.push_str(&format!(
            "- {} pair(s) exceeded |r| > {threshold}:\n",
            pairs.len()
        ));
        for (a, b, r) in &pairs {
            out.push_str(&format!("  - `{a}` <-> `{b}` (r = {r:.4})\n"));
        }
    }
    out.push('\n');

    out.push_str("### 3. Pruning Passes\n");
    if staged.is_empty() {
        out.push_str("No features were pruned this iteration.\n");
    } else {
        out.push_str(&format!("Removed {} attribute(s):\n\n", staged.len()));
        out.push_str("| Pruned Attribute | Reason |\n|---|---|\n");
        for (name, reason) in staged {
            out.push_str(&format!("| {name} | {reason} |\n"));
        }
    }
    out.push('\n');

    out.push_str("### 4. Post-Pruning Importance\n");
    let mut survivors: Vec<(&str, f64, f64)> = pool
        .active()
        .map(|r| r.name())
        .filter(|n| !staged.iter().any(|(s, _)| s == n))
        .map(|n| {
            (
                n,
                report.gain_importance.get(n).copied().unwrap_or(0.0),
                report.permutation_importance.get(n).copied().unwrap_or(0.0),
            )
        })
        .collect();
    survivors.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
    out.push_str("| Feature | Gain Share | Permutation Degradation |\n|---|---|---|\n");
    for (name, gain, perm) in survivors.iter().take(15) {
        out.push_str(&format!("| {name} | {gain:.5} | {perm:.5} |\n"));
    }
    out.push('\n');

    out.push_str("### 5. Robustness Checks\n");
    match report.robustness_delta {
        Some(delta) => out.push_str(&format!(
            "- Gaussian noise (sigma = {NOISE_SIGMA}) shifted the mean {} by {delta:+.5}.\n",
            report.metric_name
        )),
        None => out.push_str("- No robustness probe was run.\n"),
    }
    out.push('\n');

    out.push_str("### 6. Conclusions\n");
    out.push_str(final_text.unwrap_or("Evaluation complete."));
    out.push('\n');
    out.push_str(&format!(
        "\nActive feature count after pruning: {}.\n",
        active_count - staged.len()
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::scripted::{ScriptedExtractor, ScriptedScientist, ScriptedTester};
    use crate::dataset::kfold_split;
    use crate::dsl::free_columns;
    use crate::rng::SplitMix64;

    fn toy(n: usize, seed: u64) -> Dataset {
        use crate::dataset::*;
        let mut rng = SplitMix64::new(seed);
        let a: Vec<Option<f64>> = (0..n).map(|_| Some(rng.next_normal())).collect();
        let b: Vec<Option<f64>> = (0..n).map(|_| Some(rng.next_normal())).collect();
        let y: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(x, z)| x.unwrap() * z.unwrap() + 0.01 * rng.next_normal())
            .collect();
        Dataset::new(
            "toy",
            vec![
                Column {
                    name: "a".into(),
                    values: ColumnValues::Numeric(a),
                },
                Column {
                    name: "b".into(),
                    values: ColumnValues::Numeric(b),
                },
            ],
            TargetColumn {
                name: "y".into(),
                values: TargetValues::Numeric(y),
            },
            DatasetDescription {
                task_line: "The task is regression on tabular data.".into(),
                goal_line: "The overall goal is to predict 'y'.".into(),
                attribute_lines: Default::default(),
            },
        )
        .unwrap()
    }

    fn seed_pool(dataset: &Dataset) -> FeaturePool {
        let mut pool = FeaturePool::new();
        let ts: Vec<Transformation> = dataset
            .columns
            .iter()
            .map(|c| {
                Transformation::new(
                    c.name.clone(),
                    &c.name,
                    "baseline raw attribute",
                    "raw column",
                    0,
                    dataset,
                )
                .unwrap()
            })
            .collect();
        pool.append_features(ts, 0, dataset).unwrap();
        pool
    }

    #[test]
    fn scientist_first_iteration_goes_raw_exploratory() {
        let ds = toy(30, 5);
        let pool = seed_pool(&ds);
        let tp = TestPool::new();
        let mut pad = ScratchPad::new("scientist");
        let mut transcript = Transcript::new();
        let mut backend = ScriptedScientist::new(1);
        let focus = run_scientist(
            &tp,
            &pool,
            &ds,
            &mut backend,
            None,
            None,
            8,
            &PromptSet::default(),
            1,
            10,
            &mut pad,
            &mut transcript,
        )
        .unwrap();
        assert_eq!(
            focus.text,
            "evaluate raw attributes without transformations"
        );
        assert_eq!(focus.scope, FocusScope::Exploratory);
    }

    #[test]
    fn scientist_zero_budget_errors() {
        let ds = toy(30, 5);
        let pool = seed_pool(&ds);
        let mut pad = ScratchPad::new("scientist");
        let mut transcript = Transcript::new();
        let mut backend = ScriptedScientist::new(1);
        let err = run_scientist(
            &TestPool::new(),
            &pool,
            &ds,
            &mut backend,
            None,
            None,
            0,
            &PromptSet::default(),
            1,
            10,
            &mut pad,
            &mut transcript,
        )
        .unwrap_err();
        assert!(matches!(err, EpisodeError::Agent(AgentError::ZeroBudget)));
    }

    #[test]
    fn scientist_budget_exhaustion_falls_back_to_wildcard_focus() {
        use crate::agents::{AgentError, BackendStep, ChatMessage, ToolCall, ToolSpec};

        struct NoteLoop;
        impl crate::agents::AgentBackend for NoteLoop {
            fn step(
                &mut self,
                _system: &str,
                history: &[ChatMessage],
                _tools: &[ToolSpec],
            ) -> Result<BackendStep, AgentError> {
                Ok(BackendStep::Call(ToolCall {
                    id: format!("c{}", history.len()),
                    name: "take_note_tool".into(),
                    arguments: serde_json::json!({ "note": "still thinking" }),
                }))
            }
        }

        let ds = toy(30, 5);
        let pool = seed_pool(&ds);
        let mut pad = ScratchPad::new("scientist");
        let mut transcript = Transcript::new();
        let mut backend = NoteLoop;
        let focus = run_scientist(
            &TestPool::new(),
            &pool,
            &ds,
            &mut backend,
            None,
            None,
            3,
            &PromptSet::default(),
            4,
            10,
            &mut pad,
            &mut transcript,
        )
        .unwrap();
        assert_eq!(
            focus.text,
            "explore general derived features over all numeric columns"
        );
        assert_eq!(focus.scope, FocusScope::Exploratory);
        // The episode really did spend its whole budget taking notes.
        assert_eq!(pad.notes().len(), 3);
    }

    #[test]
    fn extractor_floods_from_focus_columns() {
        let ds = toy(30, 5);
        let pool = seed_pool(&ds);
        let mut pad = ScratchPad::new("extractor");
        let mut transcript = Transcript::new();
        let mut backend = ScriptedExtractor::new(6);
        let focus = FocusArea {
            text: "features derived from column(s) a, b".into(),
            scope: FocusScope::Exploitive,
            iteration: 2,
        };
        let ts = run_extractor(
            &focus,
            &ds,
            &pool,
            &mut backend,
            None,
            None,
            40,
            6,
            &PromptSet::default(),
            2,
            &mut pad,
            &mut transcript,
        )
        .unwrap();
        assert_eq!(ts.len(), 6);
        let sources: Vec<&str> = ts.iter().map(|t| t.source_text.as_str()).collect();
        assert_eq!(
            sources,
            vec!["a * b", "a / b", "b / a", "log1p(a)", "square(a)", "a + b"]
        );
        for t in &ts {
            assert!(!t.justification.is_empty());
            assert!(!t.explanation.is_empty());
            assert!(free_columns(&t.expr).iter().all(|c| ds.column(c).is_some()));
        }
    }

    #[test]
    fn extractor_raw_focus_yields_nothing_on_seeded_pool() {
        let ds = toy(30, 5);
        let pool = seed_pool(&ds);
        let mut pad = ScratchPad::new("extractor");
        let mut transcript = Transcript::new();
        let mut backend = ScriptedExtractor::new(6);
        let focus = FocusArea {
            text: "evaluate raw attributes without transformations".into(),
            scope: FocusScope::Exploratory,
            iteration: 1,
        };
        let ts = run_extractor(
            &focus,
            &ds,
            &pool,
            &mut backend,
            None,
            None,
            40,
            6,
            &PromptSet::default(),
            1,
            &mut pad,
            &mut transcript,
        )
        .unwrap();
        assert!(
            ts.is_empty(),
            "identity re-proposals must be rejected: {ts:?}"
        );
    }

    #[test]
    fn tester_produces_record_with_all_sections() {
        let ds = toy(60, 9);
        let mut pool = seed_pool(&ds);
        // A duplicated column forces the correlation rule to fire.
        pool.append_features(
            vec![Transformation::new("a_copy", "a * 1", "j", "e", 1, &ds).unwrap()],
            1,
            &ds,
        )
        .unwrap();
        let plan = kfold_split(ds.n_rows, 4, 3).unwrap();
        let params = LearnerParams {
            n_trees: 10,
            ..Default::default()
        };
        let mut pad = ScratchPad::new("tester");
        let mut transcript = Transcript::new();
        let mut backend = ScriptedTester::new();
        let focus = FocusArea {
            text: "baseline".into(),
            scope: FocusScope::Exploratory,
            iteration: 1,
        };
        let out = run_tester(
            &pool,
            &ds,
            &params,
            &plan,
            &mut backend,
            None,
            None,
            8,
            PrunePolicy::default(),
            Metric::Nrmse,
            &PromptSet::default(),
            1,
            &focus,
            42,
            &mut pad,
            &mut transcript,
        )
        .unwrap();
        for heading in [
            "Baseline Assessment",
            "Redundancy & Correlation Analysis",
            "Pruning Passes",
            "Post-Pruning Importance",
            "Robustness Checks",
            "Conclusions",
        ] {
            assert!(
                out.record.assessment_markdown.contains(heading),
                "missing section {heading}"
            );
        }
        // Exactly one of the perfectly correlated pair goes.
        let pruned: Vec<&str> = out.pruned.iter().map(|(n, _)| n.as_str()).collect();
        assert!(pruned.contains(&"a_copy") ^ pruned.contains(&"a"));
        assert_eq!(
            out.record.active_count_after,
            pool.active_count() - out.pruned.len()
        );
    }
}
