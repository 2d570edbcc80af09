//! Tabular data loading, typing, description, and fold splitting.
//!
//! A [`Dataset`] is immutable after construction: feature columns (numeric or
//! categorical, with an explicit missing marker), a target column with no
//! missing values, and a short natural-language description used to brief the
//! agents. Missing cells are always `None`; no sentinel numbers.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("file {0} has no header row")]
    MissingHeader(String),
    #[error("target column '{0}' not found in header")]
    MissingTarget(String),
    #[error("target has missing values (row {0})")]
    TargetMissing(usize),
    #[error("target cell '{value}' in row {row} is not a finite number")]
    TargetNotNumeric { row: usize, value: String },
    #[error("classification target has fewer than 2 distinct labels")]
    SingleClassTarget,
    #[error("column '{column}' hinted numeric but cell '{value}' in row {row} does not parse")]
    BadNumericCell {
        column: String,
        row: usize,
        value: String,
    },
    #[error("duplicate column name '{0}' after sanitization")]
    DuplicateColumn(String),
    #[error("empty column name in header")]
    EmptyColumnName,
    #[error("dataset must have at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("column '{column}' has {actual} values, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        actual: usize,
    },
    #[error("fold count {k} out of range for {n_rows} rows (need 2 <= k <= n_rows)")]
    BadFoldCount { k: usize, n_rows: usize },
    #[error("categorical column '{0}' has no non-missing values")]
    EmptyCategoricalColumn(String),
    #[error("description references unknown column '{0}'")]
    UnknownDescribedColumn(String),
}

/// Task the target column encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classification,
    Regression,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Classification => write!(f, "classification"),
            TaskKind::Regression => write!(f, "regression"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// One feature column. Missing cells are `None` in either representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: ColumnValues,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self.values {
            ColumnValues::Numeric(_) => ColumnKind::Numeric,
            ColumnValues::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn missing_count(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v.iter().filter(|c| c.is_none()).count(),
            ColumnValues::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
        }
    }
}

/// Target column; never contains missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetColumn {
    pub name: String,
    pub values: TargetValues,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetValues {
    Labels(Vec<String>),
    Numeric(Vec<f64>),
}

impl TargetColumn {
    pub fn len(&self) -> usize {
        match &self.values {
            TargetValues::Labels(v) => v.len(),
            TargetValues::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> TaskKind {
        match self.values {
            TargetValues::Labels(_) => TaskKind::Classification,
            TargetValues::Numeric(_) => TaskKind::Regression,
        }
    }
}

/// The three-line briefing handed to every agent: what the task is, what the
/// goal is, and one line per described raw attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescription {
    pub task_line: String,
    pub goal_line: String,
    pub attribute_lines: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<Column>,
    pub target: TargetColumn,
    pub n_rows: usize,
    pub description: DatasetDescription,
}

impl Dataset {
    /// Validates all construction invariants: consistent lengths, unique
    /// non-empty names, finite numeric cells, a missing-free target with at
    /// least two classes when categorical, and n_rows >= 2.
    pub fn new(
        name: impl Into<String>,
        columns: Vec<Column>,
        target: TargetColumn,
        description: DatasetDescription,
    ) -> Result<Self, DatasetError> {
        let n_rows = target.len();
        if n_rows < 2 {
            return Err(DatasetError::TooFewRows(n_rows));
        }
        let mut seen = HashSet::new();
        for col in &columns {
            if col.name.is_empty() {
                return Err(DatasetError::EmptyColumnName);
            }
            if !seen.insert(col.name.clone()) {
                return Err(DatasetError::DuplicateColumn(col.name.clone()));
            }
            if col.len() != n_rows {
                return Err(DatasetError::LengthMismatch {
                    column: col.name.clone(),
                    expected: n_rows,
                    actual: col.len(),
                });
            }
            match &col.values {
                ColumnValues::Numeric(vals) => {
                    for (row, v) in vals.iter().enumerate() {
                        if let Some(x) = v {
                            if !x.is_finite() {
                                return Err(DatasetError::BadNumericCell {
                                    column: col.name.clone(),
                                    row,
                                    value: x.to_string(),
                                });
                            }
                        }
                    }
                }
                ColumnValues::Categorical(vals) => {
                    if vals.iter().all(|v| v.is_none()) {
                        return Err(DatasetError::EmptyCategoricalColumn(col.name.clone()));
                    }
                }
            }
        }
        if let TargetValues::Labels(labels) = &target.values {
            let distinct: HashSet<&String> = labels.iter().collect();
            if distinct.len() < 2 {
                return Err(DatasetError::SingleClassTarget);
            }
        }
        for key in description.attribute_lines.keys() {
            if !columns.iter().any(|c| &c.name == key) {
                return Err(DatasetError::UnknownDescribedColumn(key.clone()));
            }
        }
        Ok(Dataset {
            name: name.into(),
            columns,
            target,
            n_rows,
            description,
        })
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn task(&self) -> TaskKind {
        self.target.task()
    }

    pub fn with_description(
        mut self,
        description: DatasetDescription,
    ) -> Result<Self, DatasetError> {
        for key in description.attribute_lines.keys() {
            if !self.columns.iter().any(|c| &c.name == key) {
                return Err(DatasetError::UnknownDescribedColumn(key.clone()));
            }
        }
        self.description = description;
        Ok(self)
    }
}

fn default_description(task: TaskKind, target_name: &str) -> DatasetDescription {
    DatasetDescription {
        task_line: format!("The task is {task} on tabular data."),
        goal_line: format!("The overall goal is to predict '{target_name}'."),
        attribute_lines: BTreeMap::new(),
    }
}

/// Rewrites a header name into a referencable identifier: every character
/// outside `[A-Za-z0-9_]` becomes `_`, and a leading digit gets a `_` prefix.
/// Collisions after sanitization are an error rather than silently merged.
pub fn sanitize_column_name(raw: &str) -> String {
    let mut out: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if out.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Loads a UTF-8, comma-separated, header-first CSV (RFC 4180 quoting).
/// Empty cells are missing. Columns without a hint are inferred numeric only
/// if every non-missing cell parses as a finite number, otherwise categorical.
pub fn load_csv(
    path: &Path,
    schema_hints: Option<&BTreeMap<String, ColumnKind>>,
    target_name: &str,
    task: TaskKind,
) -> Result<Dataset, DatasetError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|source| match source.kind() {
            csv::ErrorKind::Io(_) => DatasetError::Io {
                path: display.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, source.to_string()),
            },
            _ => DatasetError::Csv {
                path: display.clone(),
                source,
            },
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| DatasetError::Csv {
            path: display.clone(),
            source,
        })?
        .iter()
        .map(sanitize_column_name)
        .collect();
    if headers.is_empty() {
        return Err(DatasetError::MissingHeader(display));
    }
    let sanitized_target = sanitize_column_name(target_name);
    let target_idx = headers
        .iter()
        .position(|h| *h == sanitized_target)
        .ok_or_else(|| DatasetError::MissingTarget(target_name.to_string()))?;

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|source| DatasetError::Csv {
            path: display.clone(),
            source,
        })?;
        if record.len() != headers.len() {
            return Err(DatasetError::Csv {
                path: display.clone(),
                source: csv::Error::from(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!(
                        "ragged row {}: {} fields, expected {}",
                        row_idx + 1,
                        record.len(),
                        headers.len()
                    ),
                )),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            cells[col].push(cell.to_string());
        }
    }
    let n_rows = cells[target_idx].len();

    // Target first: no missing allowed, numeric for regression.
    let target_values = match task {
        TaskKind::Classification => {
            let mut labels = Vec::with_capacity(n_rows);
            for (row, cell) in cells[target_idx].iter().enumerate() {
                if cell.is_empty() {
                    return Err(DatasetError::TargetMissing(row));
                }
                labels.push(cell.clone());
            }
            TargetValues::Labels(labels)
        }
        TaskKind::Regression => {
            let mut nums = Vec::with_capacity(n_rows);
            for (row, cell) in cells[target_idx].iter().enumerate() {
                if cell.is_empty() {
                    return Err(DatasetError::TargetMissing(row));
                }
                match parse_finite(cell) {
                    Some(x) => nums.push(x),
                    None => {
                        return Err(DatasetError::TargetNotNumeric {
                            row,
                            value: cell.clone(),
                        })
                    }
                }
            }
            TargetValues::Numeric(nums)
        }
    };

    let mut columns = Vec::new();
    for (idx, header) in headers.iter().enumerate() {
        if idx == target_idx {
            continue;
        }
        let hint = schema_hints.and_then(|h| h.get(header).copied());
        let kind = match hint {
            Some(k) => k,
            None => {
                let all_numeric = cells[idx]
                    .iter()
                    .filter(|c| !c.is_empty())
                    .all(|c| parse_finite(c).is_some());
                if all_numeric {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                }
            }
        };
        let values = match kind {
            ColumnKind::Numeric => {
                let mut vals = Vec::with_capacity(n_rows);
                for (row, cell) in cells[idx].iter().enumerate() {
                    if cell.is_empty() {
                        vals.push(None);
                    } else {
                        match parse_finite(cell) {
                            Some(x) => vals.push(Some(x)),
                            None => {
                                return Err(DatasetError::BadNumericCell {
                                    column: header.clone(),
                                    row,
                                    value: cell.clone(),
                                })
                            }
                        }
                    }
                }
                ColumnValues::Numeric(vals)
            }
            ColumnKind::Categorical => ColumnValues::Categorical(
                cells[idx]
                    .iter()
                    .map(|c| if c.is_empty() { None } else { Some(c.clone()) })
                    .collect(),
            ),
        };
        columns.push(Column {
            name: header.clone(),
            values,
        });
    }

    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let description = default_description(task, &sanitized_target);
    Dataset::new(
        stem,
        columns,
        TargetColumn {
            name: sanitized_target,
            values: target_values,
        },
        description,
    )
}

/// Writes the canonical CSV dialect: feature columns in order, target last,
/// empty cell for missing, RFC 4180 quoting. `load_csv` on the output
/// reconstructs an identical dataset.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let display = path.display().to_string();
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|source| DatasetError::Csv {
            path: display.clone(),
            source,
        })?;
    let mut header: Vec<String> = dataset.columns.iter().map(|c| c.name.clone()).collect();
    header.push(dataset.target.name.clone());
    writer
        .write_record(&header)
        .map_err(|source| DatasetError::Csv {
            path: display.clone(),
            source,
        })?;
    for row in 0..dataset.n_rows {
        let mut record: Vec<String> = Vec::with_capacity(dataset.columns.len() + 1);
        for col in &dataset.columns {
            record.push(match &col.values {
                ColumnValues::Numeric(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
                ColumnValues::Categorical(v) => v[row].clone().unwrap_or_default(),
            });
        }
        record.push(match &dataset.target.values {
            TargetValues::Labels(v) => v[row].clone(),
            TargetValues::Numeric(v) => v[row].to_string(),
        });
        writer
            .write_record(&record)
            .map_err(|source| DatasetError::Csv {
                path: display.clone(),
                source,
            })?;
    }
    writer.flush().map_err(|source| DatasetError::Io {
        path: display,
        source,
    })?;
    Ok(())
}

/// Per-column statistics over non-missing values. Std is the population
/// standard deviation (denominator n) everywhere in this crate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemaSummary {
    pub columns: Vec<ColumnSummary>,
    pub target: TargetSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSummary {
    pub name: String,
    pub kind: ColumnKind,
    pub missing_rate: f64,
    pub stats: ColumnStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnStats {
    Numeric {
        mean: Option<f64>,
        std: Option<f64>,
        min: Option<f64>,
        max: Option<f64>,
    },
    Categorical {
        cardinality: usize,
        /// Top 5 tokens by descending frequency, ties by token.
        top: Vec<(String, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetSummary {
    Labels {
        cardinality: usize,
        counts: Vec<(String, usize)>,
    },
    Numeric {
        mean: f64,
        std: f64,
        min: f64,
        max: f64,
    },
}

pub fn population_stats(values: &[f64]) -> Option<(f64, f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some((mean, var.sqrt(), min, max))
}

fn frequency_table(values: &[Option<String>]) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values.iter().flatten() {
        *counts.entry(v.as_str()).or_default() += 1;
    }
    let mut table: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    // Descending count; the BTreeMap origin already ordered ties by token.
    table.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    table
}

/// Structured replacement for ad-hoc dataframe exploration: one entry per
/// column plus the target, all statistics over non-missing values.
pub fn describe(dataset: &Dataset) -> SchemaSummary {
    let n = dataset.n_rows as f64;
    let columns = dataset
        .columns
        .iter()
        .map(|col| {
            let missing_rate = col.missing_count() as f64 / n;
            let stats = match &col.values {
                ColumnValues::Numeric(vals) => {
                    let present: Vec<f64> = vals.iter().flatten().copied().collect();
                    match population_stats(&present) {
                        Some((mean, std, min, max)) => ColumnStats::Numeric {
                            mean: Some(mean),
                            std: Some(std),
                            min: Some(min),
                            max: Some(max),
                        },
                        None => ColumnStats::Numeric {
                            mean: None,
                            std: None,
                            min: None,
                            max: None,
                        },
                    }
                }
                ColumnValues::Categorical(vals) => {
                    let table = frequency_table(vals);
                    ColumnStats::Categorical {
                        cardinality: table.len(),
                        top: table.into_iter().take(5).collect(),
                    }
                }
            };
            ColumnSummary {
                name: col.name.clone(),
                kind: col.kind(),
                missing_rate,
                stats,
            }
        })
        .collect();
    let target = match &dataset.target.values {
        TargetValues::Labels(labels) => {
            let wrapped: Vec<Option<String>> = labels.iter().cloned().map(Some).collect();
            let counts = frequency_table(&wrapped);
            TargetSummary::Labels {
                cardinality: counts.len(),
                counts,
            }
        }
        TargetValues::Numeric(vals) => {
            let (mean, std, min, max) =
                population_stats(vals).expect("target is non-empty by construction");
            TargetSummary::Numeric {
                mean,
                std,
                min,
                max,
            }
        }
    };
    SchemaSummary { columns, target }
}

/// A deterministic k-fold partition of row indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.folds.iter().map(|f| f.len()).sum()
    }

    /// Rows not in fold `i`, ascending.
    pub fn complement(&self, fold: usize) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        rows.sort_unstable();
        rows
    }
}

/// Shuffles `0..n_rows` with SplitMix64(seed) and cuts the shuffled order
/// into k contiguous folds; the first `n_rows % k` folds get one extra row.
/// Fold contents are stored ascending.
pub fn kfold_split(n_rows: usize, k: usize, seed: u64) -> Result<FoldPlan, DatasetError> {
    if k < 2 || k > n_rows {
        return Err(DatasetError::BadFoldCount { k, n_rows });
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let base = n_rows / k;
    let extra = n_rows % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let mut fold: Vec<usize> = order[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(FoldPlan { k, seed, folds })
}

/// Renders the agent briefing: task line, goal line, then one
/// `name: description` line per described attribute in column order.
pub fn render_description(dataset: &Dataset) -> String {
    let mut lines = vec![
        dataset.description.task_line.clone(),
        dataset.description.goal_line.clone(),
    ];
    for col in &dataset.columns {
        if let Some(text) = dataset.description.attribute_lines.get(&col.name) {
            lines.push(format!("{}: {}", col.name, text));
        }
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_numeric_csv() {
        let f = write_temp("a,b,target\n1,2,3\n4,5,6\n7,8,9\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Regression).unwrap();
        assert_eq!(ds.n_rows, 3);
        assert_eq!(ds.columns.len(), 2);
        assert_eq!(ds.columns[0].kind(), ColumnKind::Numeric);
        match &ds.target.values {
            TargetValues::Numeric(v) => assert_eq!(v, &vec![3.0, 6.0, 9.0]),
            _ => panic!("expected numeric target"),
        }
    }

    #[test]
    fn infers_categorical_with_missing() {
        let f = write_temp("color,target\nred,1\nblue,0\n,1\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Classification).unwrap();
        let col = ds.column("color").unwrap();
        assert_eq!(col.kind(), ColumnKind::Categorical);
        assert_eq!(col.missing_count(), 1);
    }

    #[test]
    fn schema_hints_override_inference() {
        let f = write_temp("code,target\n1,0\n2,1\n");
        let mut hints = BTreeMap::new();
        hints.insert("code".to_string(), ColumnKind::Categorical);
        let ds = load_csv(f.path(), Some(&hints), "target", TaskKind::Classification).unwrap();
        assert_eq!(ds.column("code").unwrap().kind(), ColumnKind::Categorical);
        // A numeric hint on non-numeric cells is an error, not a silent fallback.
        let f = write_temp("code,target\nabc,0\n2,1\n");
        let mut hints = BTreeMap::new();
        hints.insert("code".to_string(), ColumnKind::Numeric);
        assert!(matches!(
            load_csv(f.path(), Some(&hints), "target", TaskKind::Classification),
            Err(DatasetError::BadNumericCell { .. })
        ));
    }

    #[test]
    fn mixed_column_becomes_categorical() {
        let f = write_temp("x,target\n1,0\nfoo,1\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Classification).unwrap();
        assert_eq!(ds.column("x").unwrap().kind(), ColumnKind::Categorical);
    }

    #[test]
    fn target_with_missing_cell_errors() {
        let f = write_temp("a,target\n1,2\n3,\n");
        let err = load_csv(f.path(), None, "target", TaskKind::Regression).unwrap_err();
        assert!(matches!(err, DatasetError::TargetMissing(1)), "{err}");
    }

    #[test]
    fn missing_target_column_errors() {
        let f = write_temp("a,b\n1,2\n3,4\n");
        let err = load_csv(f.path(), None, "y", TaskKind::Regression).unwrap_err();
        assert!(matches!(err, DatasetError::MissingTarget(_)));
    }

    #[test]
    fn ragged_row_errors() {
        let f = write_temp("a,b,target\n1,2,3\n4,5\n");
        assert!(load_csv(f.path(), None, "target", TaskKind::Regression).is_err());
    }

    #[test]
    fn missing_file_errors() {
        let err = load_csv(
            Path::new("/nonexistent/definitely_missing.csv"),
            None,
            "y",
            TaskKind::Regression,
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::Io { .. }));
    }

    #[test]
    fn single_class_target_errors() {
        let f = write_temp("a,target\n1,x\n2,x\n");
        let err = load_csv(f.path(), None, "target", TaskKind::Classification).unwrap_err();
        assert!(matches!(err, DatasetError::SingleClassTarget));
    }

    #[test]
    fn all_missing_categorical_column_is_rejected() {
        let err = Dataset::new(
            "bad",
            vec![Column {
                name: "c".into(),
                values: ColumnValues::Categorical(vec![None, None]),
            }],
            TargetColumn {
                name: "y".into(),
                values: TargetValues::Numeric(vec![0.0, 1.0]),
            },
            DatasetDescription {
                task_line: "t".into(),
                goal_line: "g".into(),
                attribute_lines: BTreeMap::new(),
            },
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::EmptyCategoricalColumn(_)));
    }

    #[test]
    fn header_names_are_sanitized() {
        let f = write_temp("my col,2nd,target\n1,2,3\n4,5,6\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Regression).unwrap();
        assert_eq!(ds.columns[0].name, "my_col");
        assert_eq!(ds.columns[1].name, "_2nd");
    }

    #[test]
    fn describe_numeric_population_std() {
        let f = write_temp("x,target\n1,0\n2,1\n3,0\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Classification).unwrap();
        let summary = describe(&ds);
        match &summary.columns[0].stats {
            ColumnStats::Numeric {
                mean,
                std,
                min,
                max,
            } => {
                assert_eq!(mean.unwrap(), 2.0);
                let expected = (2.0f64 / 3.0).sqrt();
                assert!((std.unwrap() - expected).abs() < 1e-12);
                assert_eq!(min.unwrap(), 1.0);
                assert_eq!(max.unwrap(), 3.0);
            }
            _ => panic!("expected numeric stats"),
        }
    }

    #[test]
    fn describe_categorical_top_frequencies() {
        let f = write_temp("c,target\nx,0\nx,1\ny,0\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Classification).unwrap();
        let summary = describe(&ds);
        match &summary.columns[0].stats {
            ColumnStats::Categorical { cardinality, top } => {
                assert_eq!(*cardinality, 2);
                assert_eq!(top[0], ("x".to_string(), 2));
            }
            _ => panic!("expected categorical stats"),
        }
    }

    #[test]
    fn describe_missing_rate_and_mean() {
        let f = write_temp("x,target\n1,0\n,1\n3,0\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Classification).unwrap();
        let summary = describe(&ds);
        assert!((summary.columns[0].missing_rate - 1.0 / 3.0).abs() < 1e-12);
        match &summary.columns[0].stats {
            ColumnStats::Numeric { mean, .. } => assert_eq!(mean.unwrap(), 2.0),
            _ => panic!(),
        }
    }

    #[test]
    fn describe_is_pure() {
        let f = write_temp("x,c,target\n1,a,0\n2,b,1\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Classification).unwrap();
        assert_eq!(describe(&ds), describe(&ds));
    }

    #[test]
    fn kfold_even_sizes() {
        let plan = kfold_split(10, 5, 1).unwrap();
        assert!(plan.folds.iter().all(|f| f.len() == 2));
    }

    #[test]
    fn kfold_uneven_sizes() {
        let plan = kfold_split(11, 5, 7).unwrap();
        let mut sizes: Vec<usize> = plan.folds.iter().map(|f| f.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn kfold_partitions_and_reproduces() {
        for seed in [0u64, 1, 99, 123456] {
            for (n, k) in [(10, 5), (11, 5), (37, 4), (100, 3)] {
                let plan = kfold_split(n, k, seed).unwrap();
                let plan2 = kfold_split(n, k, seed).unwrap();
                assert_eq!(plan, plan2);
                let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
                all.sort_unstable();
                assert_eq!(all, (0..n).collect::<Vec<_>>());
                let sizes: Vec<usize> = plan.folds.iter().map(|f| f.len()).collect();
                let min = sizes.iter().min().unwrap();
                let max = sizes.iter().max().unwrap();
                assert!(max - min <= 1);
            }
        }
    }

    #[test]
    fn kfold_out_of_range_errors() {
        assert!(kfold_split(5, 1, 0).is_err());
        assert!(kfold_split(5, 6, 0).is_err());
        assert!(kfold_split(5, 5, 0).is_ok());
    }

    #[test]
    fn render_description_orders_by_column() {
        let f = write_temp("b,a,target\n1,2,3\n4,5,6\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Regression).unwrap();
        let mut lines = BTreeMap::new();
        lines.insert("a".to_string(), "second column".to_string());
        lines.insert("b".to_string(), "first column".to_string());
        let ds = ds
            .with_description(DatasetDescription {
                task_line: "The task is regression on tabular data.".into(),
                goal_line: "The overall goal is to predict 'target'.".into(),
                attribute_lines: lines,
            })
            .unwrap();
        let text = render_description(&ds);
        let rendered: Vec<&str> = text.lines().collect();
        assert_eq!(rendered.len(), 4);
        // b precedes a because the file orders columns that way.
        assert_eq!(rendered[2], "b: first column");
        assert_eq!(rendered[3], "a: second column");
    }

    #[test]
    fn render_description_without_attributes_is_two_lines() {
        let f = write_temp("a,target\n1,2\n3,4\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Regression).unwrap();
        assert_eq!(render_description(&ds).lines().count(), 2);
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let f = write_temp("a,c,target\n1.5,red,3\n,blue,6\n2,,9.25\n");
        let ds = load_csv(f.path(), None, "target", TaskKind::Regression).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, out.path()).unwrap();
        let mut reloaded = load_csv(out.path(), None, "target", TaskKind::Regression).unwrap();
        reloaded.name = ds.name.clone(); // file stems differ; everything else must match
        assert_eq!(ds, reloaded);
    }
}
