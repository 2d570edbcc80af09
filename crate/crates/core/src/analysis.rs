//! Meta-analyses over published score tables and point sets: mean reciprocal
//! rank across methods and Pearson correlation, plus the CSV loaders the CLI
//! feeds them from.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("score table is empty")]
    EmptyTable,
    #[error("dataset row '{0}' has no present scores")]
    RowWithoutScores(String),
    #[error("need equal-length inputs with at least 2 points, got {xs} and {ys}")]
    BadPointCount { xs: usize, ys: usize },
    #[error("{0} input has zero variance")]
    ZeroVariance(&'static str),
    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub dataset: String,
    pub n: u64,
    pub p: u64,
    /// One entry per method; `None` marks a missing published score.
    pub scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub methods: Vec<String>,
    pub rows: Vec<ScoreRow>,
    pub higher_is_better: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    /// Tied methods all take the best tied position.
    MinRank,
    /// Tied methods take the mean of the positions they span.
    AverageRank,
}

impl TieRule {
    pub fn parse(text: &str) -> Option<TieRule> {
        match text {
            "min-rank" => Some(TieRule::MinRank),
            "average-rank" => Some(TieRule::AverageRank),
            _ => None,
        }
    }
}

/// Mean reciprocal rank per method. Within each dataset row only the present
/// methods are ranked; a method's reciprocal ranks are averaged over exactly
/// the datasets where it has a score.
pub fn mrr(table: &ScoreTable, tie_rule: TieRule) -> Result<BTreeMap<String, f64>, AnalysisError> {
    if table.rows.is_empty() || table.methods.is_empty() {
        return Err(AnalysisError::EmptyTable);
    }
    let mut sums: Vec<f64> = vec![0.0; table.methods.len()];
    let mut counts: Vec<usize> = vec![0; table.methods.len()];
    for row in &table.rows {
        let present: Vec<(usize, f64)> = row
            .scores
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|v| (i, v)))
            .collect();
        if present.is_empty() {
            return Err(AnalysisError::RowWithoutScores(row.dataset.clone()));
        }
        for &(method, score) in &present {
            let better = present
                .iter()
                .filter(|(_, other)| {
                    if table.higher_is_better {
                        *other > score
                    } else {
                        *other < score
                    }
                })
                .count();
            let tied = present.iter().filter(|(_, other)| *other == score).count();
            let rank = match tie_rule {
                TieRule::MinRank => (better + 1) as f64,
                TieRule::AverageRank => better as f64 + (tied as f64 + 1.0) / 2.0,
            };
            sums[method] += 1.0 / rank;
            counts[method] += 1;
        }
    }
    Ok(table
        .methods
        .iter()
        .enumerate()
        .filter(|(i, _)| counts[*i] > 0)
        .map(|(i, m)| (m.clone(), sums[i] / counts[i] as f64))
        .collect())
}

/// Product-moment correlation with population moments.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(AnalysisError::BadPointCount {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 {
        return Err(AnalysisError::ZeroVariance("x"));
    }
    if vy == 0.0 {
        return Err(AnalysisError::ZeroVariance("y"));
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

/// Reads a score table CSV with header `dataset,n,p,<method>...`; empty
/// cells are missing scores.
pub fn parse_score_table(path: &Path, higher_is_better: bool) -> Result<ScoreTable, AnalysisError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| AnalysisError::Csv {
            path: display.clone(),
            message: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| AnalysisError::Csv {
            path: display.clone(),
            message: e.to_string(),
        })?
        .clone();
    if headers.len() < 4 {
        return Err(AnalysisError::Csv {
            path: display,
            message: "need header dataset,n,p,<method>...".into(),
        });
    }
    let methods: Vec<String> = headers.iter().skip(3).map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| AnalysisError::Csv {
            path: display.clone(),
            message: e.to_string(),
        })?;
        let parse_count = |idx: usize| -> Result<u64, AnalysisError> {
            record
                .get(idx)
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| AnalysisError::Csv {
                    path: display.clone(),
                    message: format!("bad count in row '{}'", record.get(0).unwrap_or("")),
                })
        };
        let mut scores = Vec::with_capacity(methods.len());
        for cell in record.iter().skip(3) {
            let cell = cell.trim();
            if cell.is_empty() {
                scores.push(None);
            } else {
                scores.push(Some(cell.parse().map_err(|_| AnalysisError::Csv {
                    path: display.clone(),
                    message: format!("bad score '{cell}'"),
                })?));
            }
        }
        rows.push(ScoreRow {
            dataset: record.get(0).unwrap_or("").to_string(),
            n: parse_count(1)?,
            p: parse_count(2)?,
            scores,
        });
    }
    Ok(ScoreTable {
        methods,
        rows,
        higher_is_better,
    })
}

/// Reads an `x,y` point CSV.
pub fn parse_points(path: &Path) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| AnalysisError::Csv {
            path: display.clone(),
            message: e.to_string(),
        })?;
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| AnalysisError::Csv {
            path: display.clone(),
            message: e.to_string(),
        })?;
        let parse = |idx: usize| -> Result<f64, AnalysisError> {
            record
                .get(idx)
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| AnalysisError::Csv {
                    path: display.clone(),
                    message: format!("bad point row {:?}", record),
                })
        };
        points.push((parse(0)?, parse(1)?));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(methods: &[&str], rows: Vec<(&str, Vec<Option<f64>>)>, higher: bool) -> ScoreTable {
        ScoreTable {
            methods: methods.iter().map(|s| s.to_string()).collect(),
            rows: rows
                .into_iter()
                .map(|(d, scores)| ScoreRow {
                    dataset: d.into(),
                    n: 100,
                    p: 5,
                    scores,
                })
                .collect(),
            higher_is_better: higher,
        }
    }

    #[test]
    fn single_method_scores_one() {
        let t = table(
            &["only"],
            vec![
                ("d1", vec![Some(0.5)]),
                ("d2", vec![Some(0.9)]),
                ("d3", vec![Some(0.1)]),
            ],
            true,
        );
        let result = mrr(&t, TieRule::MinRank).unwrap();
        assert_eq!(result["only"], 1.0);
    }

    #[test]
    fn two_methods_split_ranks() {
        let t = table(
            &["A", "B"],
            vec![
                ("d1", vec![Some(0.9), Some(0.7)]),
                ("d2", vec![Some(0.8), Some(0.9)]),
            ],
            true,
        );
        let result = mrr(&t, TieRule::MinRank).unwrap();
        assert_eq!(result["A"], 0.75);
        assert_eq!(result["B"], 0.75);
    }

    #[test]
    fn ties_share_best_rank_under_min_rank() {
        let t = table(
            &["A", "B", "C"],
            vec![("d1", vec![Some(0.9), Some(0.9), Some(0.1)])],
            true,
        );
        let by_min = mrr(&t, TieRule::MinRank).unwrap();
        assert_eq!(by_min["A"], 1.0);
        assert_eq!(by_min["B"], 1.0);
        assert_eq!(by_min["C"], 1.0 / 3.0);
        let by_avg = mrr(&t, TieRule::AverageRank).unwrap();
        assert_eq!(by_avg["A"], 1.0 / 1.5);
        assert_eq!(by_avg["B"], 1.0 / 1.5);
    }

    #[test]
    fn missing_scores_are_excluded_from_that_method() {
        let t = table(
            &["A", "B"],
            vec![
                ("d1", vec![None, Some(0.9)]),
                ("d2", vec![Some(0.5), Some(0.9)]),
            ],
            true,
        );
        let result = mrr(&t, TieRule::MinRank).unwrap();
        // A only appears on d2, where it ranks second.
        assert_eq!(result["A"], 0.5);
        assert_eq!(result["B"], 1.0);
    }

    #[test]
    fn mrr_is_rank_based_and_order_invariant() {
        let base = table(
            &["A", "B"],
            vec![
                ("d1", vec![Some(0.9), Some(0.7)]),
                ("d2", vec![Some(0.4), Some(0.8)]),
            ],
            true,
        );
        let squashed = table(
            &["A", "B"],
            vec![
                // Any strictly monotone transform of each row preserves ranks.
                ("d1", vec![Some(9000.0), Some(7000.0)]),
                ("d2", vec![Some(0.04), Some(0.08)]),
            ],
            true,
        );
        assert_eq!(
            mrr(&base, TieRule::MinRank).unwrap(),
            mrr(&squashed, TieRule::MinRank).unwrap()
        );
        let mut reversed = base.clone();
        reversed.rows.reverse();
        assert_eq!(
            mrr(&base, TieRule::MinRank).unwrap(),
            mrr(&reversed, TieRule::MinRank).unwrap()
        );
        // Method order is irrelevant too.
        let swapped = table(
            &["B", "A"],
            vec![
                ("d1", vec![Some(0.7), Some(0.9)]),
                ("d2", vec![Some(0.8), Some(0.4)]),
            ],
            true,
        );
        assert_eq!(
            mrr(&base, TieRule::MinRank).unwrap(),
            mrr(&swapped, TieRule::MinRank).unwrap()
        );
    }

    #[test]
    fn lower_is_better_direction() {
        let t = table(&["A", "B"], vec![("d1", vec![Some(0.1), Some(0.9)])], false);
        let result = mrr(&t, TieRule::MinRank).unwrap();
        assert_eq!(result["A"], 1.0);
        assert_eq!(result["B"], 0.5);
    }

    #[test]
    fn empty_table_and_empty_row_error() {
        let t = ScoreTable {
            methods: vec![],
            rows: vec![],
            higher_is_better: true,
        };
        assert!(matches!(
            mrr(&t, TieRule::MinRank),
            Err(AnalysisError::EmptyTable)
        ));
        let t = table(&["A"], vec![("d1", vec![None])], true);
        assert!(matches!(
            mrr(&t, TieRule::MinRank),
            Err(AnalysisError::RowWithoutScores(_))
        ));
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(AnalysisError::ZeroVariance("x"))
        ));
        assert!(matches!(
            pearson(&[1.0], &[1.0]),
            Err(AnalysisError::BadPointCount { .. })
        ));
    }

    #[test]
    fn pearson_is_scale_and_shift_invariant() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let ys = [2.0, 3.0, 1.0, 9.0, 4.0];
        let base = pearson(&xs, &ys).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| 3.5 * x + 11.0).collect();
        assert!((pearson(&scaled, &ys).unwrap() - base).abs() < 1e-12);
        let flipped: Vec<f64> = xs.iter().map(|x| -2.0 * x).collect();
        assert!((pearson(&flipped, &ys).unwrap() + base).abs() < 1e-12);
        assert!((pearson(&ys, &xs).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn score_table_csv_round_trip() {
        let file = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(
            file.path(),
            "dataset,n,p,A,B\nadult,48800,14,0.873,\nheart,918,11,0.858,0.875\n",
        )
        .unwrap();
        let t = parse_score_table(file.path(), true).unwrap();
        assert_eq!(t.methods, vec!["A", "B"]);
        assert_eq!(t.rows[0].scores, vec![Some(0.873), None]);
        assert_eq!(t.rows[1].n, 918);
    }
}
