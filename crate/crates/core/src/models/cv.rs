use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_binary_labels, evaluate, predict_gbdt, train_gbdt, GBDTModel, ModelError, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub folds: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            learning_rate: vec![0.05, 0.1, 0.3],
            max_depth: vec![2, 4, 6],
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub fold_scores: Vec<f64>,
    pub mean_average_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: TrainConfig,
    pub best_score: f64,
    /// Cells in grid order: learning rates outer, depths inner.
    pub cells: Vec<CvCell>,
}

/// Fold index per row. Each class is shuffled with the seed and dealt
/// round-robin, so every fold gets `count/k` or `count/k + 1` rows of it.
pub fn stratified_folds(y: &[u8], k: usize, seed: u64) -> Result<Vec<usize>, ModelError> {
    if k < 2 {
        return Err(ModelError::InvalidConfig("need at least 2 folds".into()));
    }
    check_binary_labels(y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; y.len()];
    for class in 0..2u8 {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.len() < k {
            return Err(ModelError::InsufficientClassCount {
                class,
                count: rows.len(),
                folds: k,
            });
        }
        rows.shuffle(&mut rng);
        for (pos, r) in rows.into_iter().enumerate() {
            fold[r] = pos % k;
        }
    }
    Ok(fold)
}

/// Splits rows into (train, test) index lists, both ascending. Each class
/// contributes `round(fraction * count)` test rows, clamped so both sides keep
/// at least one row of every class.
pub fn stratified_holdout(y: &[u8], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), ModelError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ModelError::InvalidConfig("holdout fraction must be in (0, 1)".into()));
    }
    check_binary_labels(y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; y.len()];
    for class in 0..2u8 {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.len() < 2 {
            return Err(ModelError::InsufficientClassCount {
                class,
                count: rows.len(),
                folds: 2,
            });
        }
        rows.shuffle(&mut rng);
        let take = ((fraction * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
        for &r in &rows[..take] {
            is_test[r] = true;
        }
    }
    Ok((0..y.len()).partition(|&i| !is_test[i]))
}

fn predict_labels(m: &GBDTModel, x: &[Vec<f64>]) -> Result<Vec<u8>, ModelError> {
    x.iter().map(|r| predict_gbdt(m, r).map(|p| (p >= 0.5) as u8)).collect()
}

/// Mean test-fold average accuracy of one configuration.
pub(crate) fn cv_score(
    x: &[Vec<f64>],
    y: &[u8],
    fold: &[usize],
    k: usize,
    cfg: &TrainConfig,
) -> Result<Vec<f64>, ModelError> {
    (0..k)
        .map(|f| {
            let (mut xtr, mut ytr, mut xte, mut yte) = (vec![], vec![], vec![], vec![]);
            for i in 0..x.len() {
                if fold[i] == f {
                    xte.push(x[i].clone());
                    yte.push(y[i]);
                } else {
                    xtr.push(x[i].clone());
                    ytr.push(y[i]);
                }
            }
            let m = train_gbdt(&xtr, &ytr, cfg)?;
            Ok(evaluate(&yte, &predict_labels(&m, &xte)?)?.average_accuracy)
        })
        .collect()
}

/// Stratified k-fold grid search over learning rate and depth. The best cell
/// has the highest mean average accuracy; ties go to the smaller depth, then
/// the smaller learning rate.
pub fn grid_search_cv(
    x: &[Vec<f64>],
    y: &[u8],
    grid: &Grid,
    base: &TrainConfig,
    seed: u64,
) -> Result<CvResult, ModelError> {
    if grid.learning_rate.is_empty() || grid.max_depth.is_empty() {
        return Err(ModelError::InvalidConfig("empty grid".into()));
    }
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let fold = stratified_folds(y, grid.folds, seed)?;
    let configs: Vec<TrainConfig> = grid
        .learning_rate
        .iter()
        .flat_map(|&lr| {
            grid.max_depth.iter().map(move |&d| TrainConfig {
                learning_rate: lr,
                max_depth: d,
                ..base.clone()
            })
        })
        .collect();
    configs.iter().try_for_each(TrainConfig::validate)?;
    let cells: Vec<CvCell> = configs
        .par_iter()
        .map(|cfg| {
            let fold_scores = cv_score(x, y, &fold, grid.folds, cfg)?;
            let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
            Ok(CvCell {
                learning_rate: cfg.learning_rate,
                max_depth: cfg.max_depth,
                fold_scores,
                mean_average_accuracy: mean,
            })
        })
        .collect::<Result<_, ModelError>>()?;
    let best = cells
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            b.mean_average_accuracy
                .total_cmp(&a.mean_average_accuracy)
                .then(a.max_depth.cmp(&b.max_depth))
                .then(a.learning_rate.total_cmp(&b.learning_rate))
        })
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    Ok(CvResult {
        best: configs[best].clone(),
        best_score: cells[best].mean_average_accuracy,
        cells,
    })
}
