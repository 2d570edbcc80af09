//! The two cross-iteration stores that drive the loop: the feature pool
//! (every proposed transformation, append-only with prune markers) and the
//! test pool (one evaluation record per evaluated iteration).
//!
//! Feature records are never deleted. Pruning flips a status flag and keeps
//! the full audit trail, so any past iteration's active set can be
//! reconstructed and agents can inspect what was tried before.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{FocusArea, FocusScope};
use crate::dataset::Dataset;
use crate::dsl::{self, Transformation};
use crate::matrix::FeatureMatrix;

pub const POOL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PoolError {
    #[error("a feature named '{0}' is already active")]
    DuplicateActiveName(String),
    #[error("no active feature named '{0}'")]
    UnknownOrPruned(String),
    #[error(transparent)]
    Dsl(#[from] dsl::DslError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed pool file {path}: {message}")]
    Malformed { path: String, message: String },
    #[error("pool file {path} has schema_version {found}, this build reads {expected}")]
    SchemaVersion {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("test records must have strictly increasing iterations ({prev} then {next})")]
    NonMonotonicIteration { prev: u64, next: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureStatus {
    Active,
    Pruned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub transformation: Transformation,
    pub status: FeatureStatus,
    pub created_iter: u64,
    pub pruned_iter: Option<u64>,
    pub prune_reason: Option<String>,
}

impl FeatureRecord {
    pub fn name(&self) -> &str {
        &self.transformation.name
    }

    fn assert_consistent(&self) {
        match self.status {
            FeatureStatus::Active => assert!(self.pruned_iter.is_none()),
            FeatureStatus::Pruned => {
                let pruned = self.pruned_iter.expect("pruned record has pruned_iter");
                assert!(pruned >= self.created_iter);
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeaturePool {
    records: Vec<FeatureRecord>,
}

impl FeaturePool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn active(&self) -> impl Iterator<Item = &FeatureRecord> {
        self.records
            .iter()
            .filter(|r| r.status == FeatureStatus::Active)
    }

    pub fn active_count(&self) -> usize {
        self.active().count()
    }

    pub fn pruned_count(&self) -> usize {
        self.records.len() - self.active_count()
    }

    pub fn is_name_active(&self, name: &str) -> bool {
        self.active().any(|r| r.name() == name)
    }

    /// The active record with this name, or failing that the most recent
    /// pruned one (names may be reused after a prune).
    pub fn lookup(&self, name: &str) -> Option<&FeatureRecord> {
        self.active()
            .find(|r| r.name() == name)
            .or_else(|| self.records.iter().rev().find(|r| r.name() == name))
    }

    /// Appends already-validated transformations as new active records.
    /// Re-validates against the dataset and rejects names that collide with
    /// a currently active record (pruned names may be reused).
    pub fn append_features(
        &mut self,
        transformations: Vec<Transformation>,
        iteration: u64,
        dataset: &Dataset,
    ) -> Result<(), PoolError> {
        // Validate the whole batch before mutating anything.
        let mut batch_names: Vec<&str> = Vec::with_capacity(transformations.len());
        for t in &transformations {
            if self.is_name_active(&t.name) || batch_names.contains(&t.name.as_str()) {
                return Err(PoolError::DuplicateActiveName(t.name.clone()));
            }
            dsl::validate(&t.expr, dataset)?;
            batch_names.push(&t.name);
        }
        for mut t in transformations {
            t.created_iter = iteration;
            let record = FeatureRecord {
                transformation: t,
                status: FeatureStatus::Active,
                created_iter: iteration,
                pruned_iter: None,
                prune_reason: None,
            };
            record.assert_consistent();
            self.records.push(record);
        }
        self.assert_accounting();
        Ok(())
    }

    /// Marks the named active records pruned at `iteration`. Every name must
    /// refer to a currently active record.
    pub fn prune(
        &mut self,
        names: &[String],
        iteration: u64,
        reason_per_name: &BTreeMap<String, String>,
    ) -> Result<(), PoolError> {
        for name in names {
            if !self.is_name_active(name) {
                return Err(PoolError::UnknownOrPruned(name.clone()));
            }
        }
        for name in names {
            let record = self
                .records
                .iter_mut()
                .find(|r| r.status == FeatureStatus::Active && r.name() == name)
                .expect("checked active above");
            record.status = FeatureStatus::Pruned;
            record.pruned_iter = Some(iteration);
            record.prune_reason = reason_per_name.get(name).cloned();
            record.assert_consistent();
        }
        self.assert_accounting();
        Ok(())
    }

    /// One column per active record in record order; `m*` columns total.
    pub fn active_matrix(&self, dataset: &Dataset) -> FeatureMatrix {
        let mut names = Vec::new();
        let mut columns = Vec::new();
        for record in self.active() {
            names.push(record.name().to_string());
            columns.push(dsl::evaluate(&record.transformation.expr, dataset));
        }
        FeatureMatrix::new(names, columns, dataset.n_rows)
    }

    /// Active set as of the end of iteration `iteration`, reconstructed from
    /// the audit trail: created then and not yet pruned then.
    pub fn active_at(&self, iteration: u64) -> Vec<&FeatureRecord> {
        self.records
            .iter()
            .filter(|r| r.created_iter <= iteration && r.pruned_iter.is_none_or(|p| p > iteration))
            .collect()
    }

    fn assert_accounting(&self) {
        let active = self.active_count();
        let pruned = self.pruned_count();
        assert_eq!(self.records.len(), active + pruned);
        for r in &self.records {
            r.assert_consistent();
        }
    }

    pub fn persist(&self, path: &Path) -> Result<(), PoolError> {
        let file = FeaturePoolFile {
            schema_version: POOL_SCHEMA_VERSION,
            records: self
                .records
                .iter()
                .map(|r| FeatureRecordFile {
                    name: r.name().to_string(),
                    source_text: r.transformation.source_text.clone(),
                    justification: r.transformation.justification.clone(),
                    explanation: r.transformation.explanation.clone(),
                    created_iter: r.created_iter,
                    status: r.status,
                    pruned_iter: r.pruned_iter,
                    prune_reason: r.prune_reason.clone(),
                })
                .collect(),
        };
        write_json(path, &file)
    }

    pub fn restore(path: &Path) -> Result<Self, PoolError> {
        let file: FeaturePoolFile = read_json(path, POOL_SCHEMA_VERSION)?;
        let mut records = Vec::with_capacity(file.records.len());
        for raw in file.records {
            let expr = dsl::parse(&raw.source_text).map_err(|e| PoolError::Malformed {
                path: path.display().to_string(),
                message: format!("record '{}': {e}", raw.name),
            })?;
            let record = FeatureRecord {
                transformation: Transformation {
                    name: raw.name,
                    expr,
                    justification: raw.justification,
                    explanation: raw.explanation,
                    created_iter: raw.created_iter,
                    source_text: raw.source_text,
                },
                status: raw.status,
                created_iter: raw.created_iter,
                pruned_iter: raw.pruned_iter,
                prune_reason: raw.prune_reason,
            };
            if record.status == FeatureStatus::Pruned
                && record.pruned_iter.is_none_or(|p| p < record.created_iter)
            {
                return Err(PoolError::Malformed {
                    path: path.display().to_string(),
                    message: format!("record '{}' has inconsistent prune fields", record.name()),
                });
            }
            if record.status == FeatureStatus::Active && record.pruned_iter.is_some() {
                return Err(PoolError::Malformed {
                    path: path.display().to_string(),
                    message: format!("active record '{}' carries pruned_iter", record.name()),
                });
            }
            records.push(record);
        }
        let pool = FeaturePool { records };
        pool.assert_accounting();
        Ok(pool)
    }
}

/// Mean and population standard deviation of the metric across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestRecord {
    pub iteration: u64,
    pub metric: MetricSummary,
    pub assessment_markdown: String,
    pub pruned_names: Vec<String>,
    pub active_count_after: usize,
    pub focus: FocusArea,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TestPool {
    records: Vec<TestRecord>,
}

impl TestPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[TestRecord] {
        &self.records
    }

    pub fn latest(&self) -> Option<&TestRecord> {
        self.records.last()
    }

    pub fn append(&mut self, record: TestRecord) -> Result<(), PoolError> {
        if let Some(last) = self.records.last() {
            if record.iteration <= last.iteration {
                return Err(PoolError::NonMonotonicIteration {
                    prev: last.iteration,
                    next: record.iteration,
                });
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// `(iteration, metric mean, active count after pruning)` per record,
    /// in order; the raw series behind the trajectory export.
    pub fn trajectory(&self) -> Vec<(u64, f64, usize)> {
        self.records
            .iter()
            .map(|r| (r.iteration, r.metric.mean, r.active_count_after))
            .collect()
    }

    pub fn persist(&self, path: &Path) -> Result<(), PoolError> {
        let file = TestPoolFile {
            schema_version: POOL_SCHEMA_VERSION,
            records: self
                .records
                .iter()
                .map(|r| TestRecordFile {
                    iteration: r.iteration,
                    metric_name: r.metric.name.clone(),
                    metric_mean: r.metric.mean,
                    metric_std: r.metric.std,
                    pruned_names: r.pruned_names.clone(),
                    active_count_after: r.active_count_after,
                    focus_text: r.focus.text.clone(),
                    focus_scope: r.focus.scope,
                    assessment_markdown: r.assessment_markdown.clone(),
                })
                .collect(),
        };
        write_json(path, &file)
    }

    pub fn restore(path: &Path) -> Result<Self, PoolError> {
        let file: TestPoolFile = read_json(path, POOL_SCHEMA_VERSION)?;
        let mut pool = TestPool::new();
        for raw in file.records {
            pool.append(TestRecord {
                iteration: raw.iteration,
                metric: MetricSummary {
                    name: raw.metric_name,
                    mean: raw.metric_mean,
                    std: raw.metric_std,
                },
                assessment_markdown: raw.assessment_markdown,
                pruned_names: raw.pruned_names,
                active_count_after: raw.active_count_after,
                focus: FocusArea {
                    text: raw.focus_text,
                    scope: raw.focus_scope,
                    iteration: raw.iteration,
                },
            })?;
        }
        Ok(pool)
    }
}

#[derive(Serialize, Deserialize)]
struct FeaturePoolFile {
    schema_version: u32,
    records: Vec<FeatureRecordFile>,
}

#[derive(Serialize, Deserialize)]
struct FeatureRecordFile {
    name: String,
    source_text: String,
    justification: String,
    explanation: String,
    created_iter: u64,
    status: FeatureStatus,
    pruned_iter: Option<u64>,
    prune_reason: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct TestPoolFile {
    schema_version: u32,
    records: Vec<TestRecordFile>,
}

#[derive(Serialize, Deserialize)]
struct TestRecordFile {
    iteration: u64,
    metric_name: String,
    metric_mean: f64,
    metric_std: f64,
    pruned_names: Vec<String>,
    active_count_after: usize,
    focus_text: String,
    focus_scope: FocusScope,
    assessment_markdown: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PoolError> {
    let mut text = serde_json::to_string_pretty(value).expect("pool types serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| PoolError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, expected: u32) -> Result<T, PoolError> {
    let text = std::fs::read_to_string(path).map_err(|source| PoolError::Io {
        path: path.display().to_string(),
        source,
    })?;
    // Check the version first so a mismatch is reported as such even when
    // newer versions add or rename fields.
    let probe: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| PoolError::Malformed {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let found = probe
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| PoolError::Malformed {
            path: path.display().to_string(),
            message: "missing schema_version".into(),
        })? as u32;
    if found != expected {
        return Err(PoolError::SchemaVersion {
            path: path.display().to_string(),
            found,
            expected,
        });
    }
    serde_json::from_value(probe).map_err(|e| PoolError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
