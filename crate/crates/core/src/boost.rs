//! Weighted gradient-boosted regression trees for squared error.
//!
//! Each round fits a depth-limited tree to the current residuals. Splits
//! maximize weighted variance reduction over exact thresholds (midpoints
//! between consecutive distinct feature values); a leaf predicts
//! `learning_rate * Σ w r / (Σ w + l2)`. Rows with zero weight never take
//! part in growing a tree, so they cannot change the model.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const N_ESTIMATORS_GRID: [usize; 4] = [10, 50, 100, 250];
pub const LEARNING_RATE_GRID: [f64; 3] = [0.001, 0.01, 0.1];
pub const MAX_DEPTH_GRID: [usize; 3] = [3, 5, 10];

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoostError {
    #[error("feature vectors are empty")]
    NoFeatures,
    #[error("no training rows")]
    Empty,
    #[error("row {row} has {got} features, expected {expected}")]
    RaggedFeatures { row: usize, expected: usize, got: usize },
    #[error("{targets} targets but {rows} feature rows and {weights} weights")]
    LengthMismatch {
        rows: usize,
        targets: usize,
        weights: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("negative sample weight {0}")]
    NegativeWeight(f64),
    #[error("every sample weight is zero")]
    AllZeroWeights,
    #[error("invalid hyperparameter: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 shrinkage added to the leaf weight sum.
    pub l2: f64,
    /// Minimum total sample weight in each child of a split.
    pub min_child_weight: f64,
    /// Fraction of rows drawn (without replacement) for each tree.
    pub subsample: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 3,
            l2: 1.0,
            min_child_weight: 1.0,
            subsample: 1.0,
        }
    }
}

impl BoostParams {
    /// Every combination of the estimator, learning-rate and depth grids,
    /// with the remaining fields taken from `self`.
    pub fn grid(&self) -> Vec<BoostParams> {
        let mut out = Vec::new();
        for &n_estimators in &N_ESTIMATORS_GRID {
            for &learning_rate in &LEARNING_RATE_GRID {
                for &max_depth in &MAX_DEPTH_GRID {
                    out.push(BoostParams {
                        n_estimators,
                        learning_rate,
                        max_depth,
                        ..self.clone()
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), BoostError> {
        let bad = |m: String| Err(BoostError::InvalidParams(m));
        if self.n_estimators == 0 {
            return bad("n_estimators must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate {} not in (0, 1]", self.learning_rate));
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1".into());
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 {} must be a non-negative number", self.l2));
        }
        if !(self.min_child_weight >= 0.0 && self.min_child_weight.is_finite()) {
            return bad(format!(
                "min_child_weight {} must be non-negative",
                self.min_child_weight
            ));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad(format!("subsample {} not in (0, 1]", self.subsample));
        }
        Ok(())
    }
}

/// A regression tree stored as parallel arrays. Node 0 is the root; a node
/// is a leaf when `left[i] == 0`. Rows with `x[feature] <= threshold` go
/// left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<usize>,
    pub threshold: Vec<f64>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub value: Vec<f64>,
}

impl Tree {
    fn new() -> Self {
        Self {
            feature: Vec::new(),
            threshold: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            value: Vec::new(),
        }
    }

    fn push_leaf(&mut self, value: f64) -> usize {
        self.feature.push(0);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.value.push(value);
        self.value.len() - 1
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        while self.left[node] != 0 {
            node = if x[self.feature[node]] <= self.threshold[node] {
                self.left[node]
            } else {
                self.right[node]
            };
        }
        self.value[node]
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.value.len())
            .filter(|&i| self.left[i] == 0)
            .map(|i| self.value[i])
    }

    pub fn node_count(&self) -> usize {
        self.value.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Booster {
    pub n_features: usize,
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// `Σ w (y - F)^2` over the training rows after 0, 1, …, T rounds.
    pub loss_history: Vec<f64>,
}

impl Booster {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// Prediction of the first `rounds` trees only. Without row
    /// subsampling this equals the prediction of a model fitted with
    /// `n_estimators = rounds`.
    pub fn predict_truncated(&self, x: &[f64], rounds: usize) -> f64 {
        self.base_score + self.trees.iter().take(rounds).map(|t| t.predict(x)).sum::<f64>()
    }

    /// `Σ_trees Σ_leaves v^2`.
    pub fn leaf_square_sum(&self) -> f64 {
        self.trees.iter().flat_map(|t| t.leaf_values()).map(|v| v * v).sum()
    }
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    weights: &'a [f64],
    /// Weight times residual, per row.
    gradients: Vec<f64>,
    params: &'a BoostParams,
    go_left: Vec<bool>,
    scratch: Vec<usize>,
}

impl Grower<'_> {
    /// Grows a subtree over `sorted[f][lo..hi]` (the same rows for every
    /// feature `f`, each sorted by that feature) and returns its node index.
    /// The ranges are partitioned in place, left rows first.
    fn grow(&mut self, tree: &mut Tree, sorted: &mut [Vec<usize>], lo: usize, hi: usize, depth: usize) -> usize {
        let (mut w_sum, mut s_sum) = (0.0, 0.0);
        for &i in &sorted[0][lo..hi] {
            w_sum += self.weights[i];
            s_sum += self.gradients[i];
        }
        let leaf_value = self.params.learning_rate * s_sum / (w_sum + self.params.l2);
        if depth >= self.params.max_depth || hi - lo < 2 {
            return tree.push_leaf(leaf_value);
        }

        let parent_score = if w_sum > 0.0 { s_sum * s_sum / w_sum } else { 0.0 };
        let min_w = self.params.min_child_weight.max(f64::MIN_POSITIVE);
        let mut best: Option<(f64, usize, f64)> = None;
        for (f, order) in sorted.iter().enumerate() {
            let col = &self.columns[f];
            let order = &order[lo..hi];
            let (mut wl, mut sl) = (0.0, 0.0);
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                wl += self.weights[i];
                sl += self.gradients[i];
                let (a, b) = (col[i], col[order[pos + 1]]);
                if a == b || wl < min_w {
                    continue;
                }
                let (wr, sr) = (w_sum - wl, s_sum - sl);
                if wr < min_w {
                    break;
                }
                let gain = sl * sl / wl + sr * sr / wr - parent_score;
                if gain > MIN_GAIN * (1.0 + parent_score) && best.is_none_or(|(g, _, _)| gain > g) {
                    let mut thr = a + (b - a) / 2.0;
                    if thr >= b {
                        thr = a;
                    }
                    best = Some((gain, f, thr));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return tree.push_leaf(leaf_value);
        };
        let col = &self.columns[feature];
        for &i in &sorted[0][lo..hi] {
            self.go_left[i] = col[i] <= threshold;
        }
        let mut n_left = 0;
        for order in sorted.iter_mut() {
            self.scratch.clear();
            n_left = 0;
            for pos in lo..hi {
                let i = order[pos];
                if self.go_left[i] {
                    order[lo + n_left] = i;
                    n_left += 1;
                } else {
                    self.scratch.push(i);
                }
            }
            order[lo + n_left..hi].copy_from_slice(&self.scratch);
        }
        let node = tree.push_leaf(0.0);
        tree.feature[node] = feature;
        tree.threshold[node] = threshold;
        let left = self.grow(tree, sorted, lo, lo + n_left, depth + 1);
        let right = self.grow(tree, sorted, lo + n_left, hi, depth + 1);
        tree.left[node] = left;
        tree.right[node] = right;
        node
    }
}

/// Fits a boosted ensemble on row-major `features`.
pub fn fit(
    features: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    params: &BoostParams,
    seed: u64,
) -> Result<Booster, BoostError> {
    params.validate()?;
    let n = features.len();
    if n == 0 {
        return Err(BoostError::Empty);
    }
    if targets.len() != n || weights.len() != n {
        return Err(BoostError::LengthMismatch {
            rows: n,
            targets: targets.len(),
            weights: weights.len(),
        });
    }
    let n_features = features[0].len();
    if n_features == 0 {
        return Err(BoostError::NoFeatures);
    }
    for (row, x) in features.iter().enumerate() {
        if x.len() != n_features {
            return Err(BoostError::RaggedFeatures {
                row,
                expected: n_features,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(BoostError::NonFinite("features"));
        }
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(BoostError::NonFinite("targets"));
    }
    if let Some(&w) = weights.iter().find(|w| w.is_nan() || **w < 0.0) {
        return Err(if w.is_nan() {
            BoostError::NonFinite("weights")
        } else {
            BoostError::NegativeWeight(w)
        });
    }
    if weights.iter().any(|w| w.is_infinite()) {
        return Err(BoostError::NonFinite("weights"));
    }
    let active: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    if active.is_empty() {
        return Err(BoostError::AllZeroWeights);
    }

    let w_total: f64 = active.iter().map(|&i| weights[i]).sum();
    let base_score = active.iter().map(|&i| weights[i] * targets[i]).sum::<f64>() / w_total;

    let columns: Vec<Vec<f64>> = (0..n_features)
        .map(|f| features.iter().map(|x| x[f]).collect())
        .collect();
    let presorted: Vec<Vec<usize>> = columns
        .iter()
        .map(|col| {
            let mut order = active.clone();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            order
        })
        .collect();

    let mut pred = vec![base_score; n];
    let loss = |pred: &[f64]| -> f64 { (0..n).map(|i| weights[i] * (targets[i] - pred[i]).powi(2)).sum() };
    let mut loss_history = vec![loss(&pred)];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_bag = vec![true; n];

    for _ in 0..params.n_estimators {
        let mut sorted: Vec<Vec<usize>> = if params.subsample < 1.0 {
            let m = ((active.len() as f64 * params.subsample).round() as usize).max(1);
            in_bag.iter_mut().for_each(|b| *b = false);
            for pick in sample(&mut rng, active.len(), m) {
                in_bag[active[pick]] = true;
            }
            presorted
                .iter()
                .map(|o| o.iter().copied().filter(|&i| in_bag[i]).collect())
                .collect()
        } else {
            presorted.clone()
        };
        let rows = sorted[0].len();
        let mut grower = Grower {
            columns: &columns,
            weights,
            gradients: (0..n).map(|i| weights[i] * (targets[i] - pred[i])).collect(),
            params,
            go_left: vec![false; n],
            scratch: Vec::with_capacity(rows),
        };
        let mut tree = Tree::new();
        grower.grow(&mut tree, &mut sorted, 0, rows, 0);
        for (p, x) in pred.iter_mut().zip(features) {
            *p += tree.predict(x);
        }
        loss_history.push(loss(&pred));
        trees.push(tree);
    }

    Ok(Booster {
        n_features,
        base_score,
        trees,
        loss_history,
    })
}
