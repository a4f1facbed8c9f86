//! Classifiers, evaluation metrics and cross-validated grid search.

mod cv;
mod gbdt;
mod logreg;
mod metrics;
mod naive_bayes;

pub use cv::{grid_search_cv, stratified_folds, stratified_holdout, CvCell, CvResult, Grid};
pub use gbdt::{
    logloss_grad_hess, mean_logloss, predict_gbdt, train_gbdt, train_gbdt_with_history, GBDTModel,
    TrainConfig, TreeNode,
};
pub use logreg::{logreg_loss_grad, train_logreg, LogRegModel, LogRegParams};
pub use metrics::{evaluate, EvalReport};
pub use naive_bayes::{train_naive_bayes, GaussianNB, VARIANCE_FLOOR};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("no training rows")]
    EmptyData,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("class {0} is absent from the true labels")]
    DegenerateEval(u8),
    #[error("class {class} has {count} rows, fewer than {folds} folds")]
    InsufficientClassCount { class: u8, count: usize, folds: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
}

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// Checks that every label is 0 or 1 and returns the number of ones.
pub fn check_binary_labels(y: &[u8]) -> Result<usize, ModelError> {
    let mut ones = 0;
    for &v in y {
        match v {
            0 => {}
            1 => ones += 1,
            other => return Err(ModelError::InvalidLabel(other)),
        }
    }
    Ok(ones)
}
