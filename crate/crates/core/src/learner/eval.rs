//! Fold-based evaluation and the quantitative feedback signals the tester
//! consumes: per-fold metrics, gain and permutation importances, pairwise
//! correlations, and noise robustness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::FoldPlan;
use crate::matrix::FeatureMatrix;
use crate::rng::{derive_seed, SplitMix64};

use super::metrics::{accuracy, nrmse_with, NrmseNormalizer};
use super::{train, LearnerError, LearnerParams, Predictions, Targets, TreeEnsembleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Nrmse,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Nrmse => "nrmse",
        }
    }

    pub fn default_higher_is_better(&self) -> bool {
        matches!(self, Metric::Accuracy)
    }
}

/// Pairwise Pearson coefficients with missing cells pairwise-deleted.
/// `None` marks undefined entries (zero variance or fewer than 2 shared rows).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.values[a][b]
    }

    /// Unordered pairs with |r| strictly above the threshold, by name.
    pub fn pairs_above(&self, threshold: f64) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for i in 0..self.names.len() {
            for j in (i + 1)..self.names.len() {
                if let Some(r) = self.values[i][j] {
                    if r.abs() > threshold {
                        out.push((self.names[i].clone(), self.names[j].clone(), r));
                    }
                }
            }
        }
        out
    }
}

/// Everything the tester reports about one evaluation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metric_name: String,
    pub per_fold_metrics: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub gain_importance: BTreeMap<String, f64>,
    pub permutation_importance: BTreeMap<String, f64>,
    pub correlation: CorrelationMatrix,
    pub robustness_delta: Option<f64>,
    /// Set when some fold's targets had zero variance and the NRMSE fell back
    /// to the unnormalized RMSE.
    pub degenerate_normalizer: bool,
}

fn check_compat(
    x: &FeatureMatrix,
    y: &Targets,
    plan: &FoldPlan,
    metric: Metric,
) -> Result<(), LearnerError> {
    if plan.n_rows() != x.n_rows {
        return Err(LearnerError::FoldPlanMismatch {
            plan: plan.n_rows(),
            rows: x.n_rows,
        });
    }
    if y.len() != x.n_rows {
        return Err(LearnerError::LengthMismatch {
            targets: y.len(),
            rows: x.n_rows,
        });
    }
    match (y, metric) {
        (Targets::Regression(_), Metric::Accuracy) => Err(LearnerError::MetricMismatch {
            metric: "accuracy".into(),
            task: "regression".into(),
        }),
        (Targets::Classification { .. }, Metric::Nrmse) => Err(LearnerError::MetricMismatch {
            metric: "nrmse".into(),
            task: "classification".into(),
        }),
        _ => Ok(()),
    }
}

fn fold_metric(
    model: &TreeEnsembleModel,
    x_fold: &FeatureMatrix,
    y_fold: &Targets,
    metric: Metric,
) -> Result<(f64, bool), LearnerError> {
    match (model.predict(x_fold)?, y_fold, metric) {
        (Predictions::Labels(pred), Targets::Classification { .. }, Metric::Accuracy) => {
            let truth = y_fold.labels().expect("classification targets");
            Ok((accuracy(&pred, &truth), false))
        }
        (Predictions::Regression(pred), Targets::Regression(truth), Metric::Nrmse) => {
            let (v, degenerate) = nrmse_with(&pred, truth, NrmseNormalizer::Std);
            Ok((v, degenerate))
        }
        _ => Err(LearnerError::MetricMismatch {
            metric: metric.name().into(),
            task: "mixed".into(),
        }),
    }
}

fn train_fold(
    x: &FeatureMatrix,
    y: &Targets,
    plan: &FoldPlan,
    params: &LearnerParams,
    fold: usize,
) -> Result<(TreeEnsembleModel, Vec<usize>), LearnerError> {
    let train_rows = plan.complement(fold);
    if let Targets::Classification { indices, .. } = y {
        let mut seen = std::collections::BTreeSet::new();
        for &r in &train_rows {
            seen.insert(indices[r]);
        }
        if seen.len() < 2 {
            return Err(LearnerError::SingleClassFold(fold));
        }
    }
    let model = train(&x.subset_rows(&train_rows), &y.subset(&train_rows), params)?;
    Ok((model, train_rows))
}

/// Per fold: train on the complement, score the held-out fold. Reports
/// per-fold metric values, their mean and population std, and the gain
/// importances averaged across fold models.
pub fn cross_validate(
    x: &FeatureMatrix,
    y: &Targets,
    plan: &FoldPlan,
    params: &LearnerParams,
    metric: Metric,
) -> Result<EvalReport, LearnerError> {
    check_compat(x, y, plan, metric)?;
    let mut per_fold = Vec::with_capacity(plan.k);
    let mut degenerate = false;
    let mut gain_acc: BTreeMap<String, f64> = BTreeMap::new();
    for fold in 0..plan.k {
        let (model, _) = train_fold(x, y, plan, params, fold)?;
        let rows = &plan.folds[fold];
        let (value, flag) = fold_metric(&model, &x.subset_rows(rows), &y.subset(rows), metric)?;
        per_fold.push(value);
        degenerate |= flag;
        for (name, share) in model.gain_importance() {
            *gain_acc.entry(name).or_insert(0.0) += share / plan.k as f64;
        }
    }
    let n = per_fold.len() as f64;
    let mean = per_fold.iter().sum::<f64>() / n;
    let std = (per_fold
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(EvalReport {
        metric_name: metric.name().to_string(),
        per_fold_metrics: per_fold,
        mean,
        std,
        gain_importance: gain_acc,
        permutation_importance: BTreeMap::new(),
        correlation: CorrelationMatrix::default(),
        robustness_delta: None,
        degenerate_normalizer: degenerate,
    })
}

/// Mean metric degradation when a feature's values are shuffled within each
/// validation fold: `baseline - permuted` for accuracy, `permuted - baseline`
/// for NRMSE, so bigger always means more load-bearing.
pub fn permutation_importance(
    x: &FeatureMatrix,
    y: &Targets,
    plan: &FoldPlan,
    params: &LearnerParams,
    metric: Metric,
    seed: u64,
) -> Result<BTreeMap<String, f64>, LearnerError> {
    check_compat(x, y, plan, metric)?;
    let mut degradation: BTreeMap<String, f64> = x.names.iter().map(|n| (n.clone(), 0.0)).collect();
    for fold in 0..plan.k {
        let (model, _) = train_fold(x, y, plan, params, fold)?;
        let rows = &plan.folds[fold];
        let x_fold = x.subset_rows(rows);
        let y_fold = y.subset(rows);
        let (baseline, _) = fold_metric(&model, &x_fold, &y_fold, metric)?;
        for (col, name) in x.names.iter().enumerate() {
            let mut shuffled = x_fold.clone();
            let stream = ((fold as u64) << 32) | col as u64;
            SplitMix64::new(derive_seed(seed, "permutation", stream))
                .shuffle(&mut shuffled.columns[col]);
            let (permuted, _) = fold_metric(&model, &shuffled, &y_fold, metric)?;
            let delta = if metric.default_higher_is_better() {
                baseline - permuted
            } else {
                permuted - baseline
            };
            *degradation.get_mut(name).expect("initialized") += delta / plan.k as f64;
        }
    }
    Ok(degradation)
}

/// Pairwise Pearson coefficients over rows where both columns are present
/// (population moments). Diagonal entries are 1 where the column has nonzero
/// variance; undefined entries are `None`.
pub fn correlation_matrix(x: &FeatureMatrix) -> CorrelationMatrix {
    assert!(x.n_rows >= 2, "correlation needs at least 2 rows");
    let m = x.n_cols();
    let mut values = vec![vec![None; m]; m];
    #[allow(clippy::needless_range_loop)]
    for i in 0..m {
        for j in i..m {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for row in 0..x.n_rows {
                if let (Some(a), Some(b)) = (x.columns[i][row], x.columns[j][row]) {
                    xs.push(a);
                    ys.push(b);
                }
            }
            let r = pearson_pairwise(&xs, &ys);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    CorrelationMatrix {
        names: x.names.clone(),
        values,
    }
}

fn pearson_pairwise(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in xs.iter().zip(ys) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

/// Difference between the cross-validated metric on noise-perturbed features
/// and on clean ones. Gaussian noise with std `sigma * column_std` is added
/// to every present cell (missing cells stay missing).
pub fn noise_robustness(
    x: &FeatureMatrix,
    y: &Targets,
    plan: &FoldPlan,
    params: &LearnerParams,
    metric: Metric,
    sigma: f64,
    seed: u64,
) -> Result<f64, LearnerError> {
    let clean = cross_validate(x, y, plan, params, metric)?.mean;
    let mut noisy = x.clone();
    for col in 0..noisy.n_cols() {
        let scale = sigma * noisy.column_std(col).unwrap_or(0.0);
        let mut rng = SplitMix64::new(derive_seed(seed, "noise", col as u64));
        for cell in noisy.columns[col].iter_mut().flatten() {
            *cell += scale * rng.next_normal();
        }
    }
    let perturbed = cross_validate(&noisy, y, plan, params, metric)?.mean;
    Ok(perturbed - clean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::kfold_split;
    use crate::learner::metrics::Loss;

    fn matrix(cols: Vec<Vec<Option<f64>>>) -> FeatureMatrix {
        let n = cols[0].len();
        let names = (0..cols.len()).map(|i| format!("f{i}")).collect();
        FeatureMatrix::new(names, cols, n)
    }

    fn wave(n: usize) -> (FeatureMatrix, Targets) {
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.13).sin() * 3.0).collect();
        let noise_col: Vec<Option<f64>> = (0..n).map(|i| Some(((i * 31) % 17) as f64)).collect();
        let y: Vec<f64> = xs.iter().map(|v| v * 2.0 + 1.0).collect();
        (
            matrix(vec![xs.into_iter().map(Some).collect(), noise_col]),
            Targets::Regression(y),
        )
    }

    #[test]
    fn constant_targets_give_zero_nrmse() {
        let x = matrix(vec![(0..20).map(|i| Some(i as f64)).collect()]);
        let y = Targets::Regression(vec![5.0; 20]);
        let plan = kfold_split(20, 5, 3).unwrap();
        let report =
            cross_validate(&x, &y, &plan, &LearnerParams::default(), Metric::Nrmse).unwrap();
        assert_eq!(report.mean, 0.0);
        assert!(report.degenerate_normalizer);
    }

    #[test]
    fn five_folds_give_five_entries_and_determinism() {
        let (x, y) = wave(100);
        let plan = kfold_split(100, 5, 11).unwrap();
        let params = LearnerParams::default();
        let a = cross_validate(&x, &y, &plan, &params, Metric::Nrmse).unwrap();
        let b = cross_validate(&x, &y, &plan, &params, Metric::Nrmse).unwrap();
        assert_eq!(a.per_fold_metrics.len(), 5);
        assert_eq!(a, b);
        let total: f64 = a.gain_importance.values().sum();
        assert!((total - 1.0).abs() < 1e-9, "gain shares sum to {total}");
    }

    #[test]
    fn metric_mismatch_is_rejected() {
        let (x, y) = wave(20);
        let plan = kfold_split(20, 4, 0).unwrap();
        assert!(matches!(
            cross_validate(&x, &y, &plan, &LearnerParams::default(), Metric::Accuracy),
            Err(LearnerError::MetricMismatch { .. })
        ));
    }

    #[test]
    fn permutation_importance_signs() {
        // y depends only on f0; f1 is noise the trees may touch but barely use.
        let (x, y) = wave(120);
        let plan = kfold_split(120, 4, 5).unwrap();
        let params = LearnerParams {
            n_trees: 20,
            ..Default::default()
        };
        let imp = permutation_importance(&x, &y, &plan, &params, Metric::Nrmse, 17).unwrap();
        assert!(
            imp["f0"] > 0.05,
            "predictive feature degrades the metric: {imp:?}"
        );
        assert!(
            imp["f1"].abs() < 0.05,
            "noise feature stays near zero: {imp:?}"
        );
        let again = permutation_importance(&x, &y, &plan, &params, Metric::Nrmse, 17).unwrap();
        assert_eq!(imp, again);
    }

    #[test]
    fn correlation_matrix_basics() {
        let base: Vec<Option<f64>> = (0..10).map(|i| Some(i as f64)).collect();
        let doubled: Vec<Option<f64>> = (0..10).map(|i| Some(2.0 * i as f64)).collect();
        let negated: Vec<Option<f64>> = (0..10).map(|i| Some(-(i as f64))).collect();
        let constant: Vec<Option<f64>> = vec![Some(1.0); 10];
        let x = matrix(vec![base, doubled, negated, constant]);
        let c = correlation_matrix(&x);
        assert!((c.get(0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((c.get(0, 2).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(c.get(0, 3), None);
        assert_eq!(c.get(3, 3), None);
        assert_eq!(c.get(0, 0), Some(1.0));
    }

    #[test]
    fn correlation_of_balanced_independent_columns_is_zero() {
        let a = vec![Some(1.0), Some(1.0), Some(-1.0), Some(-1.0)];
        let b = vec![Some(1.0), Some(-1.0), Some(1.0), Some(-1.0)];
        let c = correlation_matrix(&matrix(vec![a, b]));
        assert_eq!(c.get(0, 1), Some(0.0));
    }

    #[test]
    fn noise_robustness_zero_sigma_is_exactly_zero() {
        let (x, y) = wave(60);
        let plan = kfold_split(60, 3, 2).unwrap();
        let params = LearnerParams::default();
        let delta = noise_robustness(&x, &y, &plan, &params, Metric::Nrmse, 0.0, 9).unwrap();
        assert_eq!(delta, 0.0);
        let d1 = noise_robustness(&x, &y, &plan, &params, Metric::Nrmse, 0.01, 9).unwrap();
        let d2 = noise_robustness(&x, &y, &plan, &params, Metric::Nrmse, 0.01, 9).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn single_class_training_fold_is_an_error() {
        // 3 folds over 6 rows; engineered so some training complement sees one class.
        let x = matrix(vec![(0..4).map(|i| Some(i as f64)).collect()]);
        let labels = vec![
            "a".to_string(),
            "a".to_string(),
            "a".to_string(),
            "b".to_string(),
        ];
        let y = Targets::from_target(&crate::dataset::TargetColumn {
            name: "y".into(),
            values: crate::dataset::TargetValues::Labels(labels),
        });
        let plan = FoldPlan {
            k: 2,
            seed: 0,
            folds: vec![vec![0, 1, 2], vec![3]],
        };
        let params = LearnerParams {
            loss: Loss::Logistic,
            ..Default::default()
        };
        // Training for fold 0 sees only row 3, a single class.
        assert!(matches!(
            cross_validate(&x, &y, &plan, &params, Metric::Accuracy),
            Err(LearnerError::SingleClassFold(0))
        ));
    }

    #[test]
    fn validation_fold_labels_cannot_leak_into_training() {
        let (x, y) = wave(40);
        let plan = kfold_split(40, 4, 21).unwrap();
        let params = LearnerParams::default();
        for fold in 0..plan.k {
            let train_rows = plan.complement(fold);
            let x_train = x.subset_rows(&train_rows);
            let y_train = y.subset(&train_rows);
            let clean = train(&x_train, &y_train, &params).unwrap();
            // Poison the validation fold's targets; the complement is untouched,
            // so the fold model and its training-row predictions must be identical.
            let mut poisoned = match &y {
                Targets::Regression(v) => v.clone(),
                _ => unreachable!(),
            };
            for &r in &plan.folds[fold] {
                poisoned[r] = 1e6;
            }
            let y_poisoned = Targets::Regression(poisoned).subset(&train_rows);
            let poisoned_model = train(&x_train, &y_poisoned, &params).unwrap();
            assert_eq!(
                clean.predict_raw(&x_train).unwrap(),
                poisoned_model.predict_raw(&x_train).unwrap()
            );
        }
    }
}
