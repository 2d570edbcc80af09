//! Orchestrator-level integration: the scripted loop end to end, knowledge
//! wiring, the audit-trail reconstruction of the best set, fold hygiene on
//! the loop's own fold plan, and partial artifact persistence on failure.

use std::collections::BTreeMap;

use featforge::dataset::{
    kfold_split, Column, ColumnValues, Dataset, DatasetDescription, TargetColumn, TargetValues,
};
use featforge::learner::{train, Targets};
use featforge::orchestrator::{self, BackendConfig, KnowledgeSourceConfig, RunConfig};
use featforge::rng::{derive_seed, SplitMix64};
use featforge::transcript::EventKind;
use featforge::TaskKind;

fn product_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let a: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| a[i] * b[i] + 0.05 * rng.next_normal())
        .collect();
    let wrap = |v: &[f64]| ColumnValues::Numeric(v.iter().map(|x| Some(*x)).collect());
    Dataset::new(
        "loop-test",
        vec![
            Column {
                name: "a".into(),
                values: wrap(&a),
            },
            Column {
                name: "b".into(),
                values: wrap(&b),
            },
            Column {
                name: "c".into(),
                values: wrap(&c),
            },
        ],
        TargetColumn {
            name: "y".into(),
            values: TargetValues::Numeric(y),
        },
        DatasetDescription {
            task_line: "The task is regression on tabular data.".into(),
            goal_line: "The overall goal is to predict 'y'.".into(),
            attribute_lines: BTreeMap::new(),
        },
    )
    .unwrap()
}

#[test]
fn scripted_loop_produces_consistent_artifacts() {
    let dataset = product_dataset(120, 31);
    let mut config = RunConfig::scripted_defaults(TaskKind::Regression, 17);
    config.iterations = 4;
    config.folds = 4;
    config.learner.n_trees = 12;
    let dir = tempfile::tempdir().unwrap();
    let result = orchestrator::run(&config, &dataset, dir.path()).unwrap();

    for file in [
        "config.json",
        "run_meta.json",
        "feature_pool.json",
        "test_pool.json",
        "transcript.jsonl",
        "trajectory.csv",
        "report.md",
    ] {
        assert!(dir.path().join(file).exists(), "missing artifact {file}");
    }

    // Accounting: created = active + pruned at all times.
    let pool = &result.feature_pool;
    assert_eq!(
        pool.records().len(),
        pool.active_count() + pool.pruned_count()
    );

    // The best set is exactly the audit-trail reconstruction at best_iteration.
    let expected: Vec<String> = pool
        .active_at(result.best_iteration)
        .iter()
        .map(|r| r.name().to_string())
        .collect();
    let got: Vec<String> = result
        .best_active_features
        .iter()
        .map(|t| t.name.clone())
        .collect();
    assert_eq!(got, expected);

    // Every episode stayed within its configured budget.
    let transcript = featforge::transcript::Transcript::load(&result.transcript_path).unwrap();
    for event in transcript.events() {
        let budget = match event.agent.as_str() {
            "scientist" => config.budgets.scientist,
            "extractor" => config.budgets.extractor,
            "tester" => config.budgets.tester,
            _ => continue,
        };
        assert!(
            event.step <= budget,
            "{} exceeded its budget at step {}",
            event.agent,
            event.step
        );
    }

    // The report lists each best feature exactly once in its table section.
    let report = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    let table_section = report
        .split("## Best active feature set")
        .nth(1)
        .and_then(|rest| rest.split("## Trajectory").next())
        .expect("report contains the feature table");
    for name in &got {
        let occurrences = table_section
            .lines()
            .filter(|l| l.starts_with(&format!("| {name} |")))
            .count();
        assert_eq!(occurrences, 1, "feature {name} listed {occurrences} times");
    }
    for heading in [
        "Baseline Assessment",
        "Redundancy & Correlation Analysis",
        "Pruning Passes",
        "Post-Pruning Importance",
        "Robustness Checks",
        "Conclusions",
    ] {
        assert!(report.contains(heading), "report lacks {heading}");
    }
}

#[test]
fn knowledge_source_is_consulted_by_the_scientist() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("corpus.json");
    std::fs::write(
        &corpus_path,
        serde_json::json!([
            {"id": "interactions", "title": "Feature interactions",
             "body": "Feature interactions between correlated measurements expose joint \
                      variation that single columns miss; derived attributes built from \
                      products often rank highly."},
            {"id": "ratios", "title": "Ratio features",
             "body": "Ratios normalize one attribute against another and stabilize scale effects."}
        ])
        .to_string(),
    )
    .unwrap();

    let dataset = product_dataset(100, 5);
    let mut config = RunConfig::scripted_defaults(TaskKind::Regression, 23);
    config.iterations = 3;
    config.folds = 4;
    config.learner.n_trees = 10;
    config.knowledge.scientist = KnowledgeSourceConfig::CorpusFile {
        path: corpus_path.clone(),
    };
    let out = dir.path().join("run");
    let result = orchestrator::run(&config, &dataset, &out).unwrap();

    let transcript = featforge::transcript::Transcript::load(&result.transcript_path).unwrap();
    let mut searched = false;
    let mut cited = false;
    for event in transcript.events() {
        match &event.kind {
            EventKind::ToolCall { name, .. } if name == "search_tool" => searched = true,
            EventKind::ToolResult { name, content } if name == "search_tool" => {
                let payload: serde_json::Value = serde_json::from_str(content).unwrap();
                cited = payload["citations"]
                    .as_array()
                    .is_some_and(|c| c.iter().any(|x| x["doc_id"] == "interactions"));
            }
            _ => {}
        }
    }
    assert!(searched, "the scientist never used the knowledge tool");
    assert!(cited, "the knowledge lookup did not cite the corpus");
}

#[test]
fn loop_fold_plan_never_trains_on_validation_rows() {
    // The exact fold plan the orchestrator derives for this config.
    let dataset = product_dataset(90, 8);
    let config = RunConfig::scripted_defaults(TaskKind::Regression, 17);
    let plan = kfold_split(
        dataset.n_rows,
        config.folds,
        derive_seed(config.seed, "folds", 0),
    )
    .unwrap();

    let seeds = orchestrator::seed_transformations(&dataset);
    let mut pool = featforge::FeaturePool::new();
    pool.append_features(seeds, 0, &dataset).unwrap();
    let matrix = pool.active_matrix(&dataset);
    let targets = Targets::from_target(&dataset.target);

    for fold in 0..plan.k {
        let train_rows = plan.complement(fold);
        let x_train = matrix.subset_rows(&train_rows);
        let clean = train(&x_train, &targets.subset(&train_rows), &config.learner).unwrap();
        let mut poisoned = match &targets {
            Targets::Regression(v) => v.clone(),
            _ => unreachable!(),
        };
        for &r in &plan.folds[fold] {
            poisoned[r] = 1e12;
        }
        let dirty = train(
            &x_train,
            &Targets::Regression(poisoned).subset(&train_rows),
            &config.learner,
        )
        .unwrap();
        assert_eq!(
            clean.predict_raw(&x_train).unwrap(),
            dirty.predict_raw(&x_train).unwrap(),
            "fold {fold} leaked validation labels into training"
        );
    }
}

#[test]
fn failed_run_persists_partial_artifacts() {
    let dataset = product_dataset(60, 2);
    let mut config = RunConfig::scripted_defaults(TaskKind::Regression, 1);
    config.iterations = 2;
    config.folds = 3;
    // Nothing listens here; the very first tester episode fails.
    config.backend = BackendConfig::Remote {
        endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
        model: "missing".into(),
        credentials_env: None,
        timeout_secs: 1,
        retries: 0,
    };
    let dir = tempfile::tempdir().unwrap();
    let err = orchestrator::run(&config, &dataset, dir.path()).unwrap_err();
    assert!(matches!(err, orchestrator::RunError::Episode(_)), "{err}");
    // The seeded pool made it to disk before the abort.
    let pool = featforge::FeaturePool::restore(&dir.path().join("feature_pool.json")).unwrap();
    assert_eq!(pool.active_count(), 3);
    assert!(dir.path().join("transcript.jsonl").exists());
}

#[test]
fn missing_credentials_variable_is_a_config_error() {
    let dataset = product_dataset(60, 2);
    let mut config = RunConfig::scripted_defaults(TaskKind::Regression, 1);
    config.backend = BackendConfig::Remote {
        endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
        model: "m".into(),
        credentials_env: Some("FEATFORGE_TEST_UNSET_CREDENTIALS".into()),
        timeout_secs: 1,
        retries: 0,
    };
    let dir = tempfile::tempdir().unwrap();
    let err = orchestrator::run(&config, &dataset, dir.path()).unwrap_err();
    match err {
        orchestrator::RunError::BadConfig(message) => {
            assert!(
                message.contains("FEATFORGE_TEST_UNSET_CREDENTIALS"),
                "{message}"
            );
        }
        other => panic!("expected config error, got {other}"),
    }
}

#[test]
fn config_validation_rejects_mismatches() {
    let dataset = product_dataset(60, 2);
    let mut config = RunConfig::scripted_defaults(TaskKind::Classification, 1);
    // Classification defaults against a regression dataset must be rejected.
    let dir = tempfile::tempdir().unwrap();
    let err = orchestrator::run(&config, &dataset, dir.path()).unwrap_err();
    assert!(matches!(err, orchestrator::RunError::BadConfig(_)));
    config.iterations = 0;
    let err = orchestrator::run(&config, &dataset, dir.path()).unwrap_err();
    assert!(matches!(err, orchestrator::RunError::BadConfig(_)));
}
