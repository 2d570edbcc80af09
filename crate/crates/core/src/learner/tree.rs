//! Depth-limited regression trees with greedy variance-reduction splits and
//! learned default directions for missing values.
//!
//! Split gain at a node is `sum_l^2/n_l + sum_r^2/n_r - sum^2/n` over the
//! fitted residuals, which equals `n_l*n_r*(mean_l - mean_r)^2 / n`. Gain is
//! never negative, and zero-gain splits are allowed: they leave this node's
//! predictions unchanged but let deeper levels separate pure interactions
//! (two features whose individual splits look worthless, like an XOR pair).
//! Ties are broken deterministically by scan order: feature index ascending,
//! threshold ascending, missing-to-right before missing-to-left.

use serde::{Deserialize, Serialize};

use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        missing_left: bool,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

pub struct FitConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Quantile cap on split candidates per feature, applied only when the
    /// training set exceeds `candidate_cap_rows`.
    pub max_candidates: usize,
    pub candidate_cap_rows: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_depth: 3,
            min_samples_leaf: 1,
            max_candidates: 64,
            candidate_cap_rows: 10_000,
        }
    }
}

struct Fitter<'a> {
    columns: &'a [Vec<Option<f64>>],
    residuals: &'a [f64],
    /// Per feature: row indices with a present value, sorted by value.
    sorted: Vec<Vec<u32>>,
    /// Per feature: row indices with a missing value.
    missing: Vec<Vec<u32>>,
    cfg: &'a FitConfig,
    n_rows: usize,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy)]
struct SplitChoice {
    feature: usize,
    threshold: f64,
    missing_left: bool,
    gain: f64,
}

/// Fits one regression tree to `residuals` over all rows of `x`.
pub fn fit_tree(x: &FeatureMatrix, residuals: &[f64], cfg: &FitConfig) -> RegressionTree {
    assert_eq!(x.n_rows, residuals.len());
    let mut sorted = Vec::with_capacity(x.n_cols());
    let mut missing = Vec::with_capacity(x.n_cols());
    for col in &x.columns {
        let mut present: Vec<u32> = (0..x.n_rows as u32)
            .filter(|&r| col[r as usize].is_some())
            .collect();
        present.sort_by(|&a, &b| {
            col[a as usize]
                .unwrap()
                .partial_cmp(&col[b as usize].unwrap())
                .expect("finite values")
        });
        let absent: Vec<u32> = (0..x.n_rows as u32)
            .filter(|&r| col[r as usize].is_none())
            .collect();
        sorted.push(present);
        missing.push(absent);
    }
    let mut fitter = Fitter {
        columns: &x.columns,
        residuals,
        sorted,
        missing,
        cfg,
        n_rows: x.n_rows,
        nodes: Vec::new(),
    };
    let all = vec![true; x.n_rows];
    fitter.build(&all, x.n_rows, 0);
    RegressionTree {
        nodes: fitter.nodes,
    }
}

impl Fitter<'_> {
    fn build(&mut self, in_node: &[bool], node_count: usize, depth: usize) -> usize {
        let node_sum: f64 = (0..self.n_rows)
            .filter(|&r| in_node[r])
            .map(|r| self.residuals[r])
            .sum();
        let leaf_value = node_sum / node_count as f64;

        if depth >= self.cfg.max_depth || node_count < 2 * self.cfg.min_samples_leaf {
            self.nodes.push(Node::Leaf { value: leaf_value });
            return self.nodes.len() - 1;
        }
        let best = self.best_split(in_node, node_count, node_sum);
        let Some(choice) = best else {
            self.nodes.push(Node::Leaf { value: leaf_value });
            return self.nodes.len() - 1;
        };

        let mut left_mask = vec![false; self.n_rows];
        let mut left_count = 0usize;
        let mut right_mask = vec![false; self.n_rows];
        let mut right_count = 0usize;
        for r in 0..self.n_rows {
            if !in_node[r] {
                continue;
            }
            let goes_left = match self.columns[choice.feature][r] {
                Some(v) => v <= choice.threshold,
                None => choice.missing_left,
            };
            if goes_left {
                left_mask[r] = true;
                left_count += 1;
            } else {
                right_mask[r] = true;
                right_count += 1;
            }
        }

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: leaf_value }); // placeholder
        let left = self.build(&left_mask, left_count, depth + 1);
        let right = self.build(&right_mask, right_count, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            missing_left: choice.missing_left,
            left,
            right,
            gain: choice.gain,
        };
        slot
    }

    fn best_split(
        &self,
        in_node: &[bool],
        node_count: usize,
        node_sum: f64,
    ) -> Option<SplitChoice> {
        let mut best: Option<SplitChoice> = None;
        let min_leaf = self.cfg.min_samples_leaf;
        let parent_score = node_sum * node_sum / node_count as f64;

        for feature in 0..self.columns.len() {
            // Node-local measurements in ascending value order.
            let mut values: Vec<f64> = Vec::new();
            let mut prefix_sum: Vec<f64> = Vec::new();
            let mut running = 0.0;
            for &r in &self.sorted[feature] {
                let r = r as usize;
                if !in_node[r] {
                    continue;
                }
                running += self.residuals[r];
                values.push(self.columns[feature][r].unwrap());
                prefix_sum.push(running);
            }
            if values.len() < 2 {
                continue;
            }
            let mut missing_sum = 0.0;
            let mut missing_count = 0usize;
            for &r in &self.missing[feature] {
                if in_node[r as usize] {
                    missing_sum += self.residuals[r as usize];
                    missing_count += 1;
                }
            }

            // Boundaries between distinct consecutive values.
            let mut boundaries: Vec<usize> = (1..values.len())
                .filter(|&i| values[i] > values[i - 1])
                .collect();
            if boundaries.is_empty() {
                continue;
            }
            if self.n_rows > self.cfg.candidate_cap_rows
                && boundaries.len() > self.cfg.max_candidates
            {
                let total = boundaries.len();
                let keep = self.cfg.max_candidates;
                boundaries = (0..keep)
                    .map(|j| boundaries[j * (total - 1) / (keep - 1)])
                    .collect();
                boundaries.dedup();
            }

            for &cut in &boundaries {
                let threshold = 0.5 * (values[cut - 1] + values[cut]);
                let left_present = cut;
                let left_sum_present = prefix_sum[cut - 1];
                // missing_left = false first, then true.
                for missing_left in [false, true] {
                    let (nl, sl) = if missing_left {
                        (left_present + missing_count, left_sum_present + missing_sum)
                    } else {
                        (left_present, left_sum_present)
                    };
                    let nr = node_count - nl;
                    let sr = node_sum - sl;
                    if nl < min_leaf || nr < min_leaf {
                        continue;
                    }
                    let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent_score;
                    let replace = match best {
                        None => true,
                        Some(b) => gain > b.gain,
                    };
                    if replace {
                        best = Some(SplitChoice {
                            feature,
                            threshold,
                            missing_left,
                            gain,
                        });
                    }
                    if missing_count == 0 {
                        break; // both directions identical without missing rows
                    }
                }
            }
        }
        best
    }
}

impl RegressionTree {
    pub fn predict_row(&self, x: &FeatureMatrix, row: usize) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    missing_left,
                    left,
                    right,
                    ..
                } => {
                    let goes_left = match x.columns[*feature][row] {
                        Some(v) => v <= *threshold,
                        None => *missing_left,
                    };
                    at = if goes_left { *left } else { *right };
                }
            }
        }
    }

    /// Adds each split's gain to the per-feature accumulator.
    pub fn accumulate_gain(&self, into: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                into[*feature] += gain;
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: Vec<Vec<Option<f64>>>) -> FeatureMatrix {
        let n = cols[0].len();
        let names = (0..cols.len()).map(|i| format!("f{i}")).collect();
        FeatureMatrix::new(names, cols, n)
    }

    #[test]
    fn single_stump_on_separable_residuals() {
        let x = matrix(vec![vec![
            Some(1.0),
            Some(2.0),
            Some(3.0),
            Some(10.0),
            Some(11.0),
            Some(12.0),
        ]]);
        let residuals = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let cfg = FitConfig {
            max_depth: 1,
            ..Default::default()
        };
        let tree = fit_tree(&x, &residuals, &cfg);
        assert_eq!(tree.split_count(), 1);
        assert_eq!(tree.predict_row(&x, 0), -1.0);
        assert_eq!(tree.predict_row(&x, 5), 1.0);
        match &tree.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 6.5),
            _ => panic!("expected root split"),
        }
    }

    #[test]
    fn missing_rows_follow_learned_direction() {
        // Missing rows carry strongly positive residuals, matching the right side.
        let x = matrix(vec![vec![
            Some(1.0),
            Some(2.0),
            None,
            Some(10.0),
            Some(11.0),
            None,
        ]]);
        let residuals = [-1.0, -1.0, 2.0, 1.0, 1.0, 2.0];
        let cfg = FitConfig {
            max_depth: 1,
            ..Default::default()
        };
        let tree = fit_tree(&x, &residuals, &cfg);
        match &tree.nodes[0] {
            Node::Split { missing_left, .. } => assert!(!missing_left),
            _ => panic!("expected split"),
        }
        assert!(tree.predict_row(&x, 2) > 0.0);
    }

    #[test]
    fn constant_feature_yields_leaf() {
        let x = matrix(vec![vec![Some(5.0); 8]]);
        let residuals = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let tree = fit_tree(&x, &residuals, &FitConfig::default());
        assert_eq!(tree.split_count(), 0);
        assert_eq!(tree.predict_row(&x, 0), 0.0);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let x = matrix(vec![(0..10).map(|i| Some(i as f64)).collect()]);
        let residuals: Vec<f64> = (0..10).map(|i| if i == 0 { 10.0 } else { 0.0 }).collect();
        let cfg = FitConfig {
            max_depth: 1,
            min_samples_leaf: 3,
            ..Default::default()
        };
        let tree = fit_tree(&x, &residuals, &cfg);
        if let Node::Split { threshold, .. } = &tree.nodes[0] {
            // The isolating cut at 0.5 is forbidden; at least 3 rows per side.
            assert!(*threshold >= 2.5);
        } else {
            panic!("expected a split");
        }
    }

    #[test]
    fn candidate_cap_still_finds_a_usable_split() {
        // 200 distinct values but only 8 quantile candidates allowed.
        let x = matrix(vec![(0..200).map(|i| Some(i as f64)).collect()]);
        let residuals: Vec<f64> = (0..200).map(|i| if i < 100 { -1.0 } else { 1.0 }).collect();
        let cfg = FitConfig {
            max_depth: 1,
            min_samples_leaf: 1,
            max_candidates: 8,
            candidate_cap_rows: 100,
        };
        let tree = fit_tree(&x, &residuals, &cfg);
        assert_eq!(tree.split_count(), 1);
        // The quantile grid includes a cut near the true boundary.
        assert!(tree.predict_row(&x, 0) < 0.0);
        assert!(tree.predict_row(&x, 199) > 0.0);
    }

    #[test]
    fn zero_gain_split_enables_xor_at_depth_two() {
        // Pure XOR: every single split has zero gain, but depth 2 separates it.
        let f1: Vec<Option<f64>> = vec![Some(0.0), Some(0.0), Some(1.0), Some(1.0)];
        let f2: Vec<Option<f64>> = vec![Some(0.0), Some(1.0), Some(0.0), Some(1.0)];
        let x = matrix(vec![f1, f2]);
        let residuals = [-1.0, 1.0, 1.0, -1.0];
        let cfg = FitConfig {
            max_depth: 2,
            ..Default::default()
        };
        let tree = fit_tree(&x, &residuals, &cfg);
        for (row, expected) in residuals.iter().enumerate() {
            assert_eq!(tree.predict_row(&x, row), *expected);
        }
    }
}
