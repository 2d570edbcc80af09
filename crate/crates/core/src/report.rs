//! Run artifacts: the trajectory CSV and the markdown run report.

use std::io::Write;
use std::path::Path;

use crate::orchestrator::RunResult;

/// One row per evaluated iteration: `iteration,metric,active_count`,
/// RFC 4180 dialect.
pub fn emit_trajectory(result: &RunResult, path: &Path) -> std::io::Result<()> {
    let mut out = String::from("iteration,metric,active_count\n");
    for (iteration, metric, count) in &result.trajectory {
        out.push_str(&format!("{iteration},{metric},{count}\n"));
    }
    std::fs::write(path, out)
}

/// The human-facing run report: summary, best iteration, the surviving
/// feature definitions with their justifications, and the final feature
/// assessment verbatim. Byte-stable for scripted runs.
pub fn emit_report(result: &RunResult, path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "# Run report: {}", result.dataset_name)?;
    writeln!(f)?;
    writeln!(
        f,
        "- Metric: {} ({} is better)",
        result.metric_name,
        if result.higher_is_better {
            "higher"
        } else {
            "lower"
        }
    )?;
    writeln!(f, "- Evaluated iterations: {}", result.trajectory.len())?;
    writeln!(
        f,
        "- Best iteration: {} with {} = {:.5}",
        result.best_iteration, result.metric_name, result.best_metric
    )?;
    writeln!(f)?;
    writeln!(
        f,
        "## Best active feature set ({} features)",
        result.best_active_features.len()
    )?;
    writeln!(f)?;
    writeln!(f, "| Feature | Definition | Justification |")?;
    writeln!(f, "|---|---|---|")?;
    for t in &result.best_active_features {
        writeln!(
            f,
            "| {} | `{}` | {} |",
            t.name,
            t.source_text,
            t.justification.replace('|', "\\|")
        )?;
    }
    writeln!(f)?;
    writeln!(f, "## Trajectory")?;
    writeln!(f)?;
    writeln!(
        f,
        "| Iteration | {} | Active features |",
        result.metric_name
    )?;
    writeln!(f, "|---|---|---|")?;
    for (iteration, metric, count) in &result.trajectory {
        writeln!(f, "| {iteration} | {metric:.5} | {count} |")?;
    }
    writeln!(f)?;
    writeln!(f, "## Final feature assessment")?;
    writeln!(f)?;
    match result.test_pool.latest() {
        Some(record) => writeln!(f, "{}", record.assessment_markdown)?,
        None => writeln!(f, "No evaluations were recorded.")?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{FocusArea, FocusScope};
    use crate::pools::{FeaturePool, MetricSummary, TestPool, TestRecord};

    fn result_with(trajectory: Vec<(u64, f64, usize)>) -> RunResult {
        let mut test_pool = TestPool::new();
        for (iteration, metric, count) in &trajectory {
            test_pool
                .append(TestRecord {
                    iteration: *iteration,
                    metric: MetricSummary {
                        name: "nrmse".into(),
                        mean: *metric,
                        std: 0.0,
                    },
                    assessment_markdown: "### 6. Conclusions\nfine".into(),
                    pruned_names: vec![],
                    active_count_after: *count,
                    focus: FocusArea {
                        text: "f".into(),
                        scope: FocusScope::Exploratory,
                        iteration: *iteration,
                    },
                })
                .unwrap();
        }
        RunResult {
            dataset_name: "unit".into(),
            best_iteration: trajectory.first().map(|t| t.0).unwrap_or(0),
            best_metric: trajectory.first().map(|t| t.1).unwrap_or(0.0),
            best_active_features: vec![],
            trajectory,
            transcript_path: std::path::PathBuf::new(),
            feature_pool: FeaturePool::new(),
            test_pool,
            metric_name: "nrmse".into(),
            higher_is_better: false,
        }
    }

    #[test]
    fn trajectory_csv_round_trips() {
        let trajectory = vec![(0, 0.4959755184989135, 3), (2, 0.09339057169106459, 8)];
        let result = result_with(trajectory.clone());
        let file = tempfile::NamedTempFile::new().unwrap();
        emit_trajectory(&result, file.path()).unwrap();
        let text = std::fs::read_to_string(file.path()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration,metric,active_count"));
        let parsed: Vec<(u64, f64, usize)> = lines
            .map(|l| {
                let mut cells = l.split(',');
                (
                    cells.next().unwrap().parse().unwrap(),
                    cells.next().unwrap().parse().unwrap(),
                    cells.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        assert_eq!(parsed, trajectory);
    }

    #[test]
    fn empty_trajectory_writes_header_only() {
        let result = result_with(vec![]);
        let file = tempfile::NamedTempFile::new().unwrap();
        emit_trajectory(&result, file.path()).unwrap();
        assert_eq!(
            std::fs::read_to_string(file.path()).unwrap(),
            "iteration,metric,active_count\n"
        );
    }
}
