use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_binary_labels, sigmoid, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            lr: 0.1,
            epochs: 200,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogRegModel {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.bias + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>())
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        (self.predict_proba(x) >= 0.5) as u8
    }
}

/// Mean logistic loss plus `l2/2 * |w|^2`, with its gradient in (weights, bias).
pub fn logreg_loss_grad(model: &LogRegModel, x: &[Vec<f64>], y: &[u8], l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (row, &yi) in x.iter().zip(y) {
        let m = model.bias + row.iter().zip(&model.weights).map(|(a, w)| a * w).sum::<f64>();
        let sp = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
        loss += sp - f64::from(yi) * m;
        let r = sigmoid(m) - f64::from(yi);
        for (g, a) in gw.iter_mut().zip(row) {
            *g += r * a;
        }
        gb += r;
    }
    let reg: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() * l2 / 2.0;
    for (g, w) in gw.iter_mut().zip(&model.weights) {
        *g = *g / n + l2 * w;
    }
    (loss / n + reg, gw, gb / n)
}

/// Full-batch gradient descent. The bias starts at the prevalence log-odds.
pub fn train_logreg(x: &[Vec<f64>], y: &[u8], params: &LogRegParams) -> Result<LogRegModel, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(ModelError::EmptyData);
    }
    let positives = check_binary_labels(y)?;
    if positives == 0 || positives == y.len() {
        return Err(ModelError::SingleClass);
    }
    let d = x[0].len();
    let prevalence = positives as f64 / y.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut model = LogRegModel {
        weights: (0..d).map(|_| rng.gen_range(-0.01..0.01)).collect(),
        bias: (prevalence / (1.0 - prevalence)).ln(),
    };
    for _ in 0..params.epochs {
        let (_, gw, gb) = logreg_loss_grad(&model, x, y, params.l2);
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= params.lr * g;
        }
        model.bias -= params.lr * gb;
    }
    Ok(model)
}
