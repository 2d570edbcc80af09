//! Column-major feature matrix with missing cells.

/// Evaluated feature columns, one per active transformation. Missing cells
/// stay `None`; the learner routes them through per-node default directions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub columns: Vec<Vec<Option<f64>>>,
    pub n_rows: usize,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<Option<f64>>>, n_rows: usize) -> Self {
        debug_assert_eq!(names.len(), columns.len());
        debug_assert!(columns.iter().all(|c| c.len() == n_rows));
        FeatureMatrix {
            names,
            columns,
            n_rows,
        }
    }

    pub fn empty(n_rows: usize) -> Self {
        FeatureMatrix {
            names: Vec::new(),
            columns: Vec::new(),
            n_rows,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// New matrix keeping only the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|col| rows.iter().map(|&r| col[r]).collect())
                .collect(),
            n_rows: rows.len(),
        }
    }

    /// Population standard deviation of a column's non-missing cells.
    pub fn column_std(&self, col: usize) -> Option<f64> {
        let present: Vec<f64> = self.columns[col].iter().flatten().copied().collect();
        if present.is_empty() {
            return None;
        }
        let n = present.len() as f64;
        let mean = present.iter().sum::<f64>() / n;
        Some((present.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt())
    }
}
