use serde::{Deserialize, Serialize};

use super::{check_binary_labels, ModelError};

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes over two classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNB {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

pub fn train_naive_bayes(x: &[Vec<f64>], y: &[u8]) -> Result<GaussianNB, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let positives = check_binary_labels(y)?;
    if positives == 0 || positives == y.len() {
        return Err(ModelError::SingleClass);
    }
    let d = x[0].len();
    let counts = [(y.len() - positives) as f64, positives as f64];
    let mut means = [vec![0.0; d], vec![0.0; d]];
    let mut variances = [vec![0.0; d], vec![0.0; d]];
    for (row, &c) in x.iter().zip(y) {
        for (m, v) in means[c as usize].iter_mut().zip(row) {
            *m += v;
        }
    }
    for c in 0..2 {
        means[c].iter_mut().for_each(|m| *m /= counts[c]);
    }
    for (row, &c) in x.iter().zip(y) {
        let c = c as usize;
        for j in 0..d {
            variances[c][j] += (row[j] - means[c][j]).powi(2);
        }
    }
    for c in 0..2 {
        variances[c]
            .iter_mut()
            .for_each(|v| *v = (*v / counts[c]).max(VARIANCE_FLOOR));
    }
    let n = y.len() as f64;
    Ok(GaussianNB {
        priors: [counts[0] / n, counts[1] / n],
        means,
        variances,
    })
}

impl GaussianNB {
    fn log_joint(&self, x: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (c, slot) in out.iter_mut().enumerate() {
            let mut lp = self.priors[c].ln();
            for ((xj, m), v) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                lp -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xj - m).powi(2) / v);
            }
            *slot = lp;
        }
        out
    }

    /// Posterior class probabilities.
    pub fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let lj = self.log_joint(x);
        let mx = lj[0].max(lj[1]);
        let e = [(lj[0] - mx).exp(), (lj[1] - mx).exp()];
        let z = e[0] + e[1];
        [e[0] / z, e[1] / z]
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let lj = self.log_joint(x);
        (lj[1] > lj[0]) as u8
    }
}
