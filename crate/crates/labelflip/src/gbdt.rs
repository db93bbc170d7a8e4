//! Gradient-boosted regression trees over the logistic loss.
//!
//! This is a compact second-order booster: each round fits one regression
//! tree to the current gradient/hessian pairs, using exact greedy splits
//! over sorted unique feature values. It serves two roles — as a classifier
//! in its own right, and as the gradient engine whose final-model `(g, h)`
//! pairs drive candidate selection for the attacks.
//!
//! Split gain for a node with gradient sums `(G, H)` split into left/right
//! parts is
//!
//! ```text
//! gain = 1/2 * ( G_L^2 / (H_L + lambda)
//!              + G_R^2 / (H_R + lambda)
//!              - (G_L + G_R)^2 / (H_L + H_R + lambda) )
//! ```
//!
//! and a leaf takes the weight `-G / (H + lambda)`.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::classifier::sigmoid;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub num_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum gain required to split a node.
    pub min_split_gain: f64,
    /// Minimum hessian mass on each side of a split.
    pub min_child_weight: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            num_trees: 50,
            max_depth: 3,
            learning_rate: 0.1,
            lambda: 1.0,
            min_split_gain: 0.0,
            min_child_weight: 1e-3,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::InvalidParameter("num_trees must be positive".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter("max_depth must be positive".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.learning_rate > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if [self.lambda, self.min_split_gain, self.min_child_weight]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return Err(Error::InvalidParameter(
                "lambda, min_split_gain and min_child_weight must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// First and second derivatives of the loss at the current raw scores.
#[derive(Debug, Clone)]
pub struct GradientPair {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

/// Gradient/hessian of the logistic loss `l(y, s) = log(1 + exp(-y s))`
/// with respect to the raw score `s`:
///
/// ```text
/// g = -y * sigma(-y s),    h = sigma(-y s) * (1 - sigma(-y s))
/// ```
///
/// so `sign(g) = -y`, `|g| <= 1`, and `h` lies in `(0, 1/4]`.
pub fn logistic_gradients(raw_scores: &[f64], labels: &[i8]) -> GradientPair {
    assert_eq!(
        raw_scores.len(),
        labels.len(),
        "raw scores and labels must have equal length"
    );
    let mut g = Vec::with_capacity(labels.len());
    let mut h = Vec::with_capacity(labels.len());
    for (&score, &label) in raw_scores.iter().zip(labels) {
        let y = f64::from(label);
        let p = sigmoid(-y * score);
        g.push(-y * p);
        h.push(p * (1.0 - p));
    }
    GradientPair { g, h }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

/// One regression tree; rows route left when `x[feature] < threshold`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn leaf_value(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut index = 0;
        loop {
            match &self.nodes[index] {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    index = if row[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Root split, if the tree is not a single leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first() {
            Some(TreeNode::Split {
                feature, threshold, ..
            }) => Some((*feature, *threshold)),
            _ => None,
        }
    }
}

/// An ordered ensemble: raw prediction is
/// `base_score + learning_rate * sum_m tree_m(x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbdtModel {
    pub trees: Vec<RegressionTree>,
    pub base_score: f64,
    pub learning_rate: f64,
    dim: usize,
}

impl GbdtModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn predict_raw_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut score = self.base_score;
        for tree in &self.trees {
            score += self.learning_rate * tree.leaf_value(row);
        }
        score
    }

    pub fn predict_raw(&self, features: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if features.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: features.ncols(),
            });
        }
        Ok(features
            .rows()
            .into_iter()
            .map(|row| self.predict_raw_row(row))
            .collect())
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Exact greedy split search over one node's rows. Thresholds are midpoints
/// between consecutive distinct sorted values; the maximal gain wins, with
/// ties broken toward the lowest feature index and then lowest threshold
/// (guaranteed by strict improvement over an ascending scan).
fn best_split(
    features: ArrayView2<'_, f64>,
    g: &[f64],
    h: &[f64],
    indices: &[usize],
    params: &GbdtParams,
) -> Option<Split> {
    let d = features.ncols();
    let total_g: f64 = indices.iter().map(|&i| g[i]).sum();
    let total_h: f64 = indices.iter().map(|&i| h[i]).sum();
    let parent_score = total_g * total_g / (total_h + params.lambda);

    let mut best: Option<Split> = None;
    let mut sorted: Vec<usize> = Vec::with_capacity(indices.len());
    for feature in 0..d {
        sorted.clear();
        sorted.extend_from_slice(indices);
        sorted.sort_unstable_by(|&a, &b| {
            features[[a, feature]]
                .partial_cmp(&features[[b, feature]])
                .unwrap()
                .then(a.cmp(&b))
        });

        let mut left_g = 0.0;
        let mut left_h = 0.0;
        for pos in 0..sorted.len() - 1 {
            left_g += g[sorted[pos]];
            left_h += h[sorted[pos]];
            let value = features[[sorted[pos], feature]];
            let next = features[[sorted[pos + 1], feature]];
            if next <= value {
                continue;
            }
            let right_g = total_g - left_g;
            let right_h = total_h - left_h;
            if left_h < params.min_child_weight || right_h < params.min_child_weight {
                continue;
            }
            let threshold = 0.5 * (value + next);
            // The midpoint of two adjacent floats can round down onto the
            // left value, in which case `x < threshold` would not reproduce
            // the prefix this gain was computed for.
            if threshold <= value {
                continue;
            }
            let gain = 0.5
                * (left_g * left_g / (left_h + params.lambda)
                    + right_g * right_g / (right_h + params.lambda)
                    - parent_score);
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best.filter(|s| s.gain > params.min_split_gain)
}

fn build_node(
    features: ArrayView2<'_, f64>,
    g: &[f64],
    h: &[f64],
    indices: &[usize],
    depth: usize,
    params: &GbdtParams,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let make_leaf = |nodes: &mut Vec<TreeNode>| {
        let sum_g: f64 = indices.iter().map(|&i| g[i]).sum();
        let sum_h: f64 = indices.iter().map(|&i| h[i]).sum();
        nodes.push(TreeNode::Leaf {
            weight: -sum_g / (sum_h + params.lambda),
        });
        nodes.len() - 1
    };

    if depth >= params.max_depth || indices.len() < 2 {
        return make_leaf(nodes);
    }
    let Some(split) = best_split(features, g, h, indices, params) else {
        return make_leaf(nodes);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| features[[i, split.feature]] < split.threshold);

    let position = nodes.len();
    nodes.push(TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: 0,
        right: 0,
    });
    let left = build_node(features, g, h, &left_idx, depth + 1, params, nodes);
    let right = build_node(features, g, h, &right_idx, depth + 1, params, nodes);
    if let TreeNode::Split {
        left: l, right: r, ..
    } = &mut nodes[position]
    {
        *l = left;
        *r = right;
    }
    position
}

/// Trains the boosted ensemble and returns it together with the gradient
/// pairs evaluated at the *final* model's raw scores — the values candidate
/// selection consumes. Training is deterministic; `_seed` is reserved.
pub fn train_gbdt(
    data: &Dataset,
    params: &GbdtParams,
    _seed: u64,
) -> Result<(GbdtModel, GradientPair)> {
    params.validate()?;
    let n = data.n();
    let features = data.features();
    let all_indices: Vec<usize> = (0..n).collect();
    let mut scores = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.num_trees);

    for _ in 0..params.num_trees {
        let grads = logistic_gradients(&scores, data.labels());
        let mut nodes = Vec::new();
        build_node(
            features,
            &grads.g,
            &grads.h,
            &all_indices,
            0,
            params,
            &mut nodes,
        );
        let tree = RegressionTree { nodes };
        for (i, score) in scores.iter_mut().enumerate() {
            *score += params.learning_rate * tree.leaf_value(features.row(i));
        }
        trees.push(tree);
    }

    let final_grads = logistic_gradients(&scores, data.labels());
    Ok((
        GbdtModel {
            trees,
            base_score: 0.0,
            learning_rate: params.learning_rate,
            dim: data.dim(),
        },
        final_grads,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::classifier::log1p_exp;
    use crate::dataset::generate_linear;

    fn stump_params() -> GbdtParams {
        GbdtParams {
            num_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            lambda: 0.0,
            min_split_gain: 0.0,
            min_child_weight: 0.0,
        }
    }

    #[test]
    fn logistic_gradients_reference_values() {
        let grads = logistic_gradients(&[0.0], &[1]);
        assert_eq!(grads.g[0], -0.5);
        assert_eq!(grads.h[0], 0.25);

        // Well-trained instance: sigma(-10) = 4.5397868702434395e-05.
        let grads = logistic_gradients(&[10.0], &[1]);
        assert!((grads.g[0] + 4.5397868702434395e-05).abs() < 1e-18);
    }

    #[test]
    fn logistic_gradient_matches_central_difference() {
        let y: i8 = -1;
        let score = 0.3;
        let step = 1e-5;
        let loss = |s: f64| log1p_exp(-f64::from(y) * s);
        let numeric = (loss(score + step) - loss(score - step)) / (2.0 * step);
        let grads = logistic_gradients(&[score], &[y]);
        assert!((grads.g[0] - numeric).abs() < 1e-6);
    }

    #[test]
    fn gradient_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scores: Vec<f64> = (0..500).map(|_| rng.random_range(-30.0..30.0)).collect();
        let labels: Vec<i8> = (0..500).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let grads = logistic_gradients(&scores, &labels);
        for (&g, (&h, &y)) in grads.g.iter().zip(grads.h.iter().zip(&labels)) {
            assert!(g.abs() <= 1.0);
            assert!(h > 0.0 && h <= 0.25);
            assert_eq!(g < 0.0, y == 1, "sign(g) must be -y");
        }
    }

    #[test]
    fn stump_separates_threshold_data() {
        let features =
            Array2::from_shape_vec((6, 1), vec![0.0, 1.0, 2.0, 10.0, 11.0, 12.0]).unwrap();
        let data = Dataset::new(features, vec![-1, -1, -1, 1, 1, 1], None).unwrap();
        let (model, _) = train_gbdt(&data, &stump_params(), 0).unwrap();
        let (feature, threshold) = model.trees[0].root_split().expect("stump must split");
        assert_eq!(feature, 0);
        assert!(threshold > 2.0 && threshold < 10.0);
        let raw = model.predict_raw(data.features()).unwrap();
        for (score, &label) in raw.iter().zip(data.labels()) {
            assert_eq!(*score >= 0.0, label == 1);
        }
    }

    #[test]
    fn all_positive_labels_give_negative_gradients_and_positive_leaves() {
        let data = Dataset::new(
            Array2::from_shape_vec((4, 1), vec![0.0, 1.0, 2.0, 3.0]).unwrap(),
            vec![1, 1, 1, 1],
            None,
        )
        .unwrap();
        let (model, grads) = train_gbdt(&data, &GbdtParams::default(), 0).unwrap();
        assert!(grads.g.iter().all(|&g| g < 0.0));
        let raw = model.predict_raw(data.features()).unwrap();
        assert!(raw.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn leaf_weight_formula() {
        // A node with G = -2, H = 4, lambda = 0 takes weight -G/(H+lambda) = 0.5.
        let features = Array2::from_shape_vec((4, 1), vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let g = vec![-0.5; 4];
        let h = vec![1.0; 4];
        let params = GbdtParams {
            lambda: 0.0,
            ..GbdtParams::default()
        };
        let mut nodes = Vec::new();
        build_node(
            features.view(),
            &g,
            &h,
            &[0, 1, 2, 3],
            0,
            &params,
            &mut nodes,
        );
        match nodes.as_slice() {
            [TreeNode::Leaf { weight }] => assert!((weight - 0.5).abs() < 1e-15),
            other => panic!("expected a single leaf, got {other:?}"),
        }
    }

    #[test]
    fn constant_features_yield_pure_leaves() {
        let features = Array2::from_shape_vec((4, 2), vec![1.0; 8]).unwrap();
        let data = Dataset::new(features, vec![1, -1, 1, -1], None).unwrap();
        let (model, _) = train_gbdt(&data, &GbdtParams::default(), 0).unwrap();
        for tree in &model.trees {
            assert_eq!(tree.num_leaves(), 1);
        }
    }

    #[test]
    fn predict_raw_base_and_additivity() {
        let model = GbdtModel {
            trees: vec![],
            base_score: 0.25,
            learning_rate: 0.1,
            dim: 1,
        };
        let features = array![[1.0], [2.0]];
        assert_eq!(
            model.predict_raw(features.view()).unwrap(),
            vec![0.25, 0.25]
        );

        let leaf = |w: f64| RegressionTree {
            nodes: vec![TreeNode::Leaf { weight: w }],
        };
        let one = GbdtModel {
            trees: vec![leaf(0.7)],
            base_score: 0.0,
            learning_rate: 0.1,
            dim: 1,
        };
        assert!((one.predict_raw(features.view()).unwrap()[0] - 0.07).abs() < 1e-15);

        let two = GbdtModel {
            trees: vec![leaf(0.5), leaf(0.5)],
            base_score: 0.0,
            learning_rate: 1.0,
            dim: 1,
        };
        assert!((two.predict_raw(features.view()).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ensemble_prediction_is_additive_in_trees() {
        let data = generate_linear(80, 1.0, 13).unwrap();
        let (model, _) = train_gbdt(&data, &GbdtParams::default(), 0).unwrap();
        let full = model.predict_raw(data.features()).unwrap();
        let mut partial = GbdtModel {
            trees: model.trees[..model.trees.len() - 1].to_vec(),
            base_score: model.base_score,
            learning_rate: model.learning_rate,
            dim: model.dim(),
        };
        let shorter = partial.predict_raw(data.features()).unwrap();
        let last = model.trees.last().unwrap();
        for i in 0..data.n() {
            let expected = shorter[i] + model.learning_rate * last.leaf_value(data.row(i));
            assert!((full[i] - expected).abs() < 1e-12);
        }
        partial.trees.clear();
        assert_eq!(
            partial.predict_raw(data.features()).unwrap(),
            vec![0.0; data.n()]
        );
    }

    #[test]
    fn training_loss_is_monotone_in_rounds() {
        let data = generate_linear(150, 1.0, 4).unwrap();
        let params = GbdtParams::default();
        let (model, _) = train_gbdt(&data, &params, 0).unwrap();
        let mut scores = vec![0.0; data.n()];
        let mean_loss = |scores: &[f64]| {
            scores
                .iter()
                .zip(data.labels())
                .map(|(&s, &y)| log1p_exp(-f64::from(y) * s))
                .sum::<f64>()
                / data.n() as f64
        };
        let mut previous = mean_loss(&scores);
        for tree in &model.trees {
            for (i, score) in scores.iter_mut().enumerate() {
                *score += params.learning_rate * tree.leaf_value(data.row(i));
            }
            let current = mean_loss(&scores);
            assert!(
                current <= previous + 1e-9,
                "loss increased: {previous} -> {current}"
            );
            previous = current;
        }
    }

    /// Exhaustive (feature, threshold) oracle for tiny datasets: computes the
    /// gain of every midpoint split with the same formula and picks the
    /// maximum, breaking ties toward the lowest feature then threshold.
    fn oracle_best_split(
        data: &Dataset,
        g: &[f64],
        h: &[f64],
        params: &GbdtParams,
    ) -> Option<(usize, f64)> {
        let n = data.n();
        let total_g: f64 = g.iter().sum();
        let total_h: f64 = h.iter().sum();
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in 0..data.dim() {
            let mut values: Vec<f64> = (0..n).map(|i| data.features()[[i, feature]]).collect();
            values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            values.dedup();
            for pair in values.windows(2) {
                let threshold = 0.5 * (pair[0] + pair[1]);
                let mut left_g = 0.0;
                let mut left_h = 0.0;
                for i in 0..n {
                    if data.features()[[i, feature]] < threshold {
                        left_g += g[i];
                        left_h += h[i];
                    }
                }
                let right_g = total_g - left_g;
                let right_h = total_h - left_h;
                if left_h < params.min_child_weight || right_h < params.min_child_weight {
                    continue;
                }
                let gain = 0.5
                    * (left_g * left_g / (left_h + params.lambda)
                        + right_g * right_g / (right_h + params.lambda)
                        - total_g * total_g / (total_h + params.lambda));
                let better = match best {
                    None => true,
                    Some((bg, bf, bt)) => {
                        gain > bg
                            || (gain == bg && (feature < bf || (feature == bf && threshold < bt)))
                    }
                };
                if better && gain > params.min_split_gain {
                    best = Some((gain, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    #[test]
    fn greedy_split_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let params = GbdtParams {
            num_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            lambda: 1.0,
            min_split_gain: 0.0,
            min_child_weight: 0.0,
        };
        for _ in 0..50 {
            let n = rng.random_range(2..=8);
            let d = rng.random_range(1..=3);
            let mut values = Vec::with_capacity(n * d);
            for _ in 0..n * d {
                values.push(rng.random_range(-4.0..4.0));
            }
            let labels: Vec<i8> = (0..n)
                .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
                .collect();
            let data = Dataset::new(
                Array2::from_shape_vec((n, d), values).unwrap(),
                labels,
                None,
            )
            .unwrap();
            let grads = logistic_gradients(&vec![0.0; n], data.labels());
            let (model, _) = train_gbdt(&data, &params, 0).unwrap();
            let got = model.trees[0].root_split();
            let expected = oracle_best_split(&data, &grads.g, &grads.h, &params);
            assert_eq!(got, expected, "split disagrees on n={n} d={d}");
        }
    }
}
