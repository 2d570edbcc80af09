//! The inner predictor: a compact gradient-boosted tree ensemble trained by
//! fitting each round's regression tree to the negative gradient of the loss
//! (squared error for regression, logistic for binary classification, softmax
//! cross-entropy with one tree per class for multiclass). Leaf values are mean
//! residuals, predictions are `base_score + learning_rate * sum(tree outputs)`
//! with the link applied per loss. Training is exactly deterministic: greedy
//! splits with a fixed scan order and no subsampling.

pub mod eval;
pub mod metrics;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use eval::{
    correlation_matrix, cross_validate, noise_robustness, permutation_importance,
    CorrelationMatrix, EvalReport, Metric,
};
pub use metrics::{accuracy, loss_gradient, loss_value, nrmse, nrmse_with, Loss, NrmseNormalizer};
pub use tree::{FitConfig, Node, RegressionTree};

use crate::dataset::{TargetColumn, TargetValues};
use crate::matrix::FeatureMatrix;
use metrics::sigmoid;

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("feature matrix has no columns")]
    EmptyFeatureMatrix,
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("classification training targets contain a single class")]
    SingleClass,
    #[error("fold {0} leaves a single-class training set under logistic loss")]
    SingleClassFold(usize),
    #[error("targets have {targets} entries but the matrix has {rows} rows")]
    LengthMismatch { targets: usize, rows: usize },
    #[error("invalid learner parameters: {0}")]
    BadParams(String),
    #[error("prediction column set does not match training columns")]
    ColumnMismatch,
    #[error("fold plan covers {plan} rows but the matrix has {rows}")]
    FoldPlanMismatch { plan: usize, rows: usize },
    #[error("metric {metric} is incompatible with {task} targets")]
    MetricMismatch { metric: String, task: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub loss: Loss,
    pub seed: u64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            n_trees: 30,
            max_depth: 3,
            learning_rate: 0.3,
            min_samples_leaf: 1,
            loss: Loss::Squared,
            seed: 0,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.n_trees < 1 {
            return Err(LearnerError::BadParams("n_trees must be >= 1".into()));
        }
        if self.max_depth < 1 {
            return Err(LearnerError::BadParams("max_depth must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(LearnerError::BadParams(
                "learning_rate must be in (0, 1]".into(),
            ));
        }
        if self.min_samples_leaf < 1 {
            return Err(LearnerError::BadParams(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Training targets with classification labels mapped to indices over the
/// lexicographically sorted class list.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Regression(Vec<f64>),
    Classification {
        indices: Vec<usize>,
        classes: Vec<String>,
    },
}

impl Targets {
    pub fn from_target(target: &TargetColumn) -> Targets {
        match &target.values {
            TargetValues::Numeric(v) => Targets::Regression(v.clone()),
            TargetValues::Labels(labels) => {
                let mut classes: Vec<String> = labels.clone();
                classes.sort();
                classes.dedup();
                let indices = labels
                    .iter()
                    .map(|l| classes.binary_search(l).expect("label in class list"))
                    .collect();
                Targets::Classification { indices, classes }
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Targets::Regression(v) => v.len(),
            Targets::Classification { indices, .. } => indices.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subset(&self, rows: &[usize]) -> Targets {
        match self {
            Targets::Regression(v) => Targets::Regression(rows.iter().map(|&r| v[r]).collect()),
            Targets::Classification { indices, classes } => Targets::Classification {
                indices: rows.iter().map(|&r| indices[r]).collect(),
                classes: classes.clone(),
            },
        }
    }

    pub fn labels(&self) -> Option<Vec<String>> {
        match self {
            Targets::Regression(_) => None,
            Targets::Classification { indices, classes } => {
                Some(indices.iter().map(|&i| classes[i].clone()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Regression(Vec<f64>),
    Labels(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsembleModel {
    pub feature_names: Vec<String>,
    pub loss: Loss,
    pub learning_rate: f64,
    /// One entry per score dimension (1 for regression and binary).
    pub base_scores: Vec<f64>,
    /// Sorted class names; empty for regression.
    pub classes: Vec<String>,
    /// `rounds[r][dim]` is the tree fitted in round `r` for score dim `dim`.
    pub rounds: Vec<Vec<RegressionTree>>,
    /// Mean training loss after each boosting round.
    pub train_losses: Vec<f64>,
}

impl TreeEnsembleModel {
    fn dims(&self) -> usize {
        self.base_scores.len()
    }

    /// Raw additive scores per row and dimension (before any link).
    pub fn predict_raw(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>, LearnerError> {
        if x.names != self.feature_names {
            return Err(LearnerError::ColumnMismatch);
        }
        let dims = self.dims();
        let mut scores = vec![self.base_scores.clone(); x.n_rows];
        for round in &self.rounds {
            for (dim, tree) in round.iter().enumerate().take(dims) {
                for (row, rowscores) in scores.iter_mut().enumerate() {
                    rowscores[dim] += self.learning_rate * tree.predict_row(x, row);
                }
            }
        }
        Ok(scores)
    }

    /// Numbers for regression; argmax class labels for classification, ties
    /// resolved toward the lowest class index.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Predictions, LearnerError> {
        let raw = self.predict_raw(x)?;
        match self.loss {
            Loss::Squared => Ok(Predictions::Regression(
                raw.into_iter().map(|r| r[0]).collect(),
            )),
            Loss::Logistic => {
                let labels = raw
                    .into_iter()
                    .map(|scores| {
                        if self.classes.len() == 2 {
                            // argmax of [1-p, p]: class 1 only on strict majority.
                            if scores[0] > 0.0 {
                                self.classes[1].clone()
                            } else {
                                self.classes[0].clone()
                            }
                        } else {
                            let mut best = 0usize;
                            for (k, s) in scores.iter().enumerate() {
                                if *s > scores[best] {
                                    best = k;
                                }
                            }
                            self.classes[best].clone()
                        }
                    })
                    .collect();
                Ok(Predictions::Labels(labels))
            }
        }
    }

    /// Per-feature share of total split gain across all trees, normalized to
    /// sum to 1; all zeros when no tree ever split.
    pub fn gain_importance(&self) -> std::collections::BTreeMap<String, f64> {
        let mut totals = vec![0.0; self.feature_names.len()];
        for round in &self.rounds {
            for tree in round {
                tree.accumulate_gain(&mut totals);
            }
        }
        let sum: f64 = totals.iter().sum();
        self.feature_names
            .iter()
            .cloned()
            .zip(
                totals
                    .into_iter()
                    .map(|g| if sum > 0.0 { g / sum } else { 0.0 }),
            )
            .collect()
    }
}

fn softmax_probs(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Standard gradient boosting: per round and score dimension, fit a tree to
/// the negative loss gradient and step by `learning_rate`.
pub fn train(
    x: &FeatureMatrix,
    y: &Targets,
    params: &LearnerParams,
) -> Result<TreeEnsembleModel, LearnerError> {
    params.validate()?;
    if x.n_cols() == 0 {
        return Err(LearnerError::EmptyFeatureMatrix);
    }
    if x.n_rows < 2 {
        return Err(LearnerError::TooFewRows(x.n_rows));
    }
    if y.len() != x.n_rows {
        return Err(LearnerError::LengthMismatch {
            targets: y.len(),
            rows: x.n_rows,
        });
    }
    match (y, params.loss) {
        (Targets::Regression(_), Loss::Logistic) => {
            return Err(LearnerError::BadParams(
                "logistic loss requires classification targets".into(),
            ))
        }
        (Targets::Classification { .. }, Loss::Squared) => {
            return Err(LearnerError::BadParams(
                "squared loss requires regression targets".into(),
            ))
        }
        _ => {}
    }

    let n = x.n_rows;
    let cfg = FitConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        ..Default::default()
    };

    // Base scores and the per-dimension 0/1 (or numeric) targets.
    let (dims, base_scores, classes, y_num): (usize, Vec<f64>, Vec<String>, Vec<Vec<f64>>) = match y
    {
        Targets::Regression(values) => {
            let mean = values.iter().sum::<f64>() / n as f64;
            (1, vec![mean], Vec::new(), vec![values.clone()])
        }
        Targets::Classification { indices, classes } => {
            let seen: std::collections::BTreeSet<usize> = indices.iter().copied().collect();
            if seen.len() < 2 {
                return Err(LearnerError::SingleClass);
            }
            if classes.len() == 2 {
                let pos_rate = indices.iter().filter(|&&i| i == 1).count() as f64 / n as f64;
                let base = (pos_rate / (1.0 - pos_rate)).ln();
                let ys = indices.iter().map(|&i| i as f64).collect();
                (1, vec![base], classes.clone(), vec![ys])
            } else {
                // Multiclass starts from zero scores; round one absorbs the priors.
                let dims = classes.len();
                let ys = (0..dims)
                    .map(|k| {
                        indices
                            .iter()
                            .map(|&i| if i == k { 1.0 } else { 0.0 })
                            .collect()
                    })
                    .collect();
                (dims, vec![0.0; dims], classes.clone(), ys)
            }
        }
    };

    let multiclass = dims > 1;
    let mut scores = vec![base_scores.clone(); n];
    let mut rounds = Vec::with_capacity(params.n_trees);
    let mut train_losses = Vec::with_capacity(params.n_trees);

    for _ in 0..params.n_trees {
        let mut round_trees = Vec::with_capacity(dims);
        // Negative gradients for every dimension are computed against the
        // scores from the previous round, then all dimensions step together.
        let residuals_per_dim: Vec<Vec<f64>> = if multiclass {
            let mut acc = vec![vec![0.0; n]; dims];
            for (row, rowscores) in scores.iter().enumerate() {
                let probs = softmax_probs(rowscores);
                for k in 0..dims {
                    acc[k][row] = y_num[k][row] - probs[k];
                }
            }
            acc
        } else {
            let residuals = (0..n)
                .map(|row| match params.loss {
                    Loss::Squared => y_num[0][row] - scores[row][0],
                    Loss::Logistic => y_num[0][row] - sigmoid(scores[row][0]),
                })
                .collect();
            vec![residuals]
        };
        for (dim, residuals) in residuals_per_dim.iter().enumerate() {
            let tree = tree::fit_tree(x, residuals, &cfg);
            for (row, rowscores) in scores.iter_mut().enumerate() {
                rowscores[dim] += params.learning_rate * tree.predict_row(x, row);
            }
            round_trees.push(tree);
        }
        rounds.push(round_trees);

        let loss_now = (0..n)
            .map(|row| {
                if multiclass {
                    let probs = softmax_probs(&scores[row]);
                    let truth = (0..dims)
                        .position(|k| y_num[k][row] == 1.0)
                        .expect("one-hot target");
                    -(probs[truth].max(1e-300)).ln()
                } else {
                    loss_value(params.loss, scores[row][0], y_num[0][row])
                }
            })
            .sum::<f64>()
            / n as f64;
        train_losses.push(loss_now);
    }

    Ok(TreeEnsembleModel {
        feature_names: x.names.clone(),
        loss: match y {
            Targets::Regression(_) => Loss::Squared,
            Targets::Classification { .. } => Loss::Logistic,
        },
        learning_rate: params.learning_rate,
        base_scores,
        classes,
        rounds,
        train_losses,
    })
}
