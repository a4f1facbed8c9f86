//! Second-order gradient boosting of regression trees on the logistic loss.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_binary_labels, sigmoid, ModelError};

/// Rows times features below which split search stays on one thread.
const PARALLEL_SPLIT_WORK: usize = 16_384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub num_rounds: usize,
    pub lambda_l2: f64,
    pub min_child_cover: f64,
    /// Recorded for reproducibility; training itself draws no random numbers.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            max_depth: 6,
            num_rounds: 200,
            lambda_l2: 1.0,
            min_child_cover: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(ModelError::InvalidConfig("learning_rate must be in (0, 1]".into()));
        }
        if self.max_depth < 1 {
            return Err(ModelError::InvalidConfig("max_depth must be >= 1".into()));
        }
        if !(self.lambda_l2 >= 0.0) || !(self.min_child_cover >= 0.0) {
            return Err(ModelError::InvalidConfig("lambda_l2 and min_child_cover must be >= 0".into()));
        }
        Ok(())
    }
}

/// A regression tree node. Rows with `x[feature] < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        weight: f64,
        cover: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        cover: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn cover(&self) -> f64 {
        match self {
            TreeNode::Leaf { cover, .. } | TreeNode::Split { cover, .. } => *cover,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight, .. } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] < *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Calls `f` with every split feature in the subtree.
    pub fn visit_features(&self, f: &mut impl FnMut(usize)) {
        if let TreeNode::Split {
            feature, left, right, ..
        } = self
        {
            f(*feature);
            left.visit_features(f);
            right.visit_features(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBDTModel {
    pub num_features: usize,
    /// Log-odds added to every prediction.
    pub base_score: f64,
    pub learning_rate: f64,
    pub lambda_l2: f64,
    pub trees: Vec<TreeNode>,
}

impl GBDTModel {
    /// `base_score + learning_rate * sum(tree outputs)`.
    pub fn margin(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.num_features {
            return Err(ModelError::DimensionMismatch {
                expected: self.num_features,
                got: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(self.base_score + self.learning_rate * sum)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Spam probability `sigmoid(margin)`.
pub fn predict_gbdt(m: &GBDTModel, x: &[f64]) -> Result<f64, ModelError> {
    m.margin(x).map(sigmoid)
}

/// Gradient and hessian of the logistic loss with respect to the logit.
pub fn logloss_grad_hess(p: f64, y: u8) -> (f64, f64) {
    (p - f64::from(y), p * (1.0 - p))
}

/// Mean binary cross-entropy, computed from margins for stability.
pub fn mean_logloss(margins: &[f64], y: &[u8]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(y)
        .map(|(&m, &yi)| {
            // -[y ln p + (1-y) ln(1-p)] = ln(1 + e^m) - y m
            let sp = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
            sp - f64::from(yi) * m
        })
        .sum();
    total / margins.len() as f64
}

pub fn train_gbdt(x: &[Vec<f64>], y: &[u8], cfg: &TrainConfig) -> Result<GBDTModel, ModelError> {
    train_gbdt_with_history(x, y, cfg).map(|(m, _)| m)
}

/// Trains and also returns the mean training logloss before the first round and after each round.
pub fn train_gbdt_with_history(
    x: &[Vec<f64>],
    y: &[u8],
    cfg: &TrainConfig,
) -> Result<(GBDTModel, Vec<f64>), ModelError> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(ModelError::EmptyData);
    }
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let d = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(ModelError::DimensionMismatch {
            expected: d,
            got: row.len(),
        });
    }
    let positives = check_binary_labels(y)?;
    if positives == 0 || positives == y.len() {
        return Err(ModelError::SingleClass);
    }

    let prevalence = positives as f64 / y.len() as f64;
    let base_score = (prevalence / (1.0 - prevalence)).ln();
    let columns: Vec<Vec<f64>> = (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect();
    let sorted: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..x.len() as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut margins = vec![base_score; x.len()];
    let mut history = vec![mean_logloss(&margins, y)];
    let mut trees = Vec::with_capacity(cfg.num_rounds);
    let mut grad = vec![0.0; x.len()];
    let mut hess = vec![0.0; x.len()];
    for _ in 0..cfg.num_rounds {
        for i in 0..x.len() {
            let (g, h) = logloss_grad_hess(sigmoid(margins[i]), y[i]);
            grad[i] = g;
            hess[i] = h;
        }
        let grower = Grower {
            columns: &columns,
            grad: &grad,
            hess: &hess,
            cfg,
        };
        let tree = if d == 0 {
            let (g, h) = (grad.iter().sum::<f64>(), hess.iter().sum::<f64>());
            TreeNode::Leaf {
                weight: -g / (h + cfg.lambda_l2),
                cover: h,
            }
        } else {
            grower.grow(sorted.clone(), 0)
        };
        for (m, row) in margins.iter_mut().zip(x) {
            *m += cfg.learning_rate * tree.predict(row);
        }
        history.push(mean_logloss(&margins, y));
        trees.push(tree);
    }
    Ok((
        GBDTModel {
            num_features: d,
            base_score,
            learning_rate: cfg.learning_rate,
            lambda_l2: cfg.lambda_l2,
            trees,
        },
        history,
    ))
}

#[derive(Debug, Clone, Copy)]
struct Split {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    cfg: &'a TrainConfig,
}

impl Grower<'_> {
    /// `sorted[j]` holds this node's rows ordered by feature `j`.
    fn grow(&self, sorted: Vec<Vec<u32>>, depth: usize) -> TreeNode {
        let rows = &sorted[0];
        let g: f64 = rows.iter().map(|&r| self.grad[r as usize]).sum();
        let h: f64 = rows.iter().map(|&r| self.hess[r as usize]).sum();
        let lambda = self.cfg.lambda_l2;
        let leaf = TreeNode::Leaf {
            weight: -g / (h + lambda),
            cover: h,
        };
        if depth >= self.cfg.max_depth || rows.len() < 2 {
            return leaf;
        }
        let Some(best) = self.best_split(&sorted, g, h) else {
            return leaf;
        };
        let col = &self.columns[best.feature];
        let (left, right): (Vec<Vec<u32>>, Vec<Vec<u32>>) = sorted
            .into_iter()
            .map(|list| list.into_iter().partition(|&r| col[r as usize] < best.threshold))
            .unzip();
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            cover: h,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }

    fn best_split(&self, sorted: &[Vec<u32>], g: f64, h: f64) -> Option<Split> {
        let n = sorted[0].len();
        let search = |j: usize| self.best_split_on(j, &sorted[j], g, h);
        let candidates: Vec<Option<Split>> = if n * sorted.len() >= PARALLEL_SPLIT_WORK {
            (0..sorted.len()).into_par_iter().map(search).collect()
        } else {
            (0..sorted.len()).map(search).collect()
        };
        // highest gain; exact ties keep the smaller feature index
        candidates
            .into_iter()
            .flatten()
            .fold(None, |best: Option<Split>, s| match best {
                Some(b) if b.gain >= s.gain => Some(b),
                _ => Some(s),
            })
    }

    fn best_split_on(&self, j: usize, order: &[u32], g: f64, h: f64) -> Option<Split> {
        let col = &self.columns[j];
        let lambda = self.cfg.lambda_l2;
        let min_cover = self.cfg.min_child_cover;
        let parent = g * g / (h + lambda);
        let (mut gl, mut hl) = (0.0, 0.0);
        let mut best: Option<Split> = None;
        for k in 0..order.len() - 1 {
            let r = order[k] as usize;
            gl += self.grad[r];
            hl += self.hess[r];
            let (v, next) = (col[r], col[order[k + 1] as usize]);
            if v == next {
                continue;
            }
            let (gr, hr) = (g - gl, h - hl);
            if hl < min_cover || hr < min_cover {
                continue;
            }
            let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
            if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                let mid = v + (next - v) / 2.0;
                let threshold = if mid > v { mid } else { next };
                best = Some(Split {
                    gain,
                    feature: j,
                    threshold,
                });
            }
        }
        best
    }
}
