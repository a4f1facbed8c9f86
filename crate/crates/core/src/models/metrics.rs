use serde::{Deserialize, Serialize};

use super::{check_binary_labels, ModelError};

/// Per-class recall ("accuracy" per class), their mean, and macro F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `confusion[true][predicted]`.
    pub confusion: [[u64; 2]; 2],
    pub recall_class0: f64,
    pub recall_class1: f64,
    pub average_accuracy: f64,
    pub macro_f1: f64,
}

impl EvalReport {
    pub fn from_confusion(confusion: [[u64; 2]; 2]) -> Result<Self, ModelError> {
        let recall = |k: usize| {
            let support = confusion[k][0] + confusion[k][1];
            if support == 0 {
                Err(ModelError::DegenerateEval(k as u8))
            } else {
                Ok(confusion[k][k] as f64 / support as f64)
            }
        };
        let (r0, r1) = (recall(0)?, recall(1)?);
        let f1 = |k: usize, r: f64| {
            let predicted = confusion[0][k] + confusion[1][k];
            let precision = if predicted == 0 {
                0.0
            } else {
                confusion[k][k] as f64 / predicted as f64
            };
            if precision + r == 0.0 {
                0.0
            } else {
                2.0 * precision * r / (precision + r)
            }
        };
        Ok(EvalReport {
            confusion,
            recall_class0: r0,
            recall_class1: r1,
            average_accuracy: (r0 + r1) / 2.0,
            macro_f1: (f1(0, r0) + f1(1, r1)) / 2.0,
        })
    }
}

pub fn evaluate(y_true: &[u8], y_pred: &[u8]) -> Result<EvalReport, ModelError> {
    if y_true.len() != y_pred.len() {
        return Err(ModelError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    check_binary_labels(y_true)?;
    check_binary_labels(y_pred)?;
    let mut confusion = [[0u64; 2]; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t as usize][p as usize] += 1;
    }
    EvalReport::from_confusion(confusion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_confusion() {
        // TP1=40 FN1=10 TN=45 FP=5
        let r = EvalReport::from_confusion([[45, 5], [10, 40]]).unwrap();
        assert!((r.recall_class1 - 0.8).abs() < 1e-15);
        assert!((r.recall_class0 - 0.9).abs() < 1e-15);
        assert!((r.average_accuracy - 0.85).abs() < 1e-15);
        let f1_1 = 2.0 * (40.0 / 45.0) * 0.8 / (40.0 / 45.0 + 0.8);
        let f1_0 = 2.0 * (45.0 / 55.0) * 0.9 / (45.0 / 55.0 + 0.9);
        assert!((r.macro_f1 - (f1_0 + f1_1) / 2.0).abs() < 1e-15);
        assert!((r.macro_f1 - 0.8496).abs() < 1e-4);
    }

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 1, 0, 1];
        let r = evaluate(&y, &y).unwrap();
        assert_eq!((r.recall_class0, r.recall_class1, r.average_accuracy, r.macro_f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(evaluate(&[0, 1], &[0]), Err(ModelError::LengthMismatch { .. })));
        assert!(matches!(evaluate(&[1, 1], &[0, 1]), Err(ModelError::DegenerateEval(0))));
        assert!(matches!(evaluate(&[0, 2], &[0, 1]), Err(ModelError::InvalidLabel(2))));
    }

    proptest! {
        #[test]
        fn class_swap_symmetry(pairs in prop::collection::vec((0u8..2, 0u8..2), 2..60)) {
            let mut t: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            t[0] = 0;
            t[1] = 1;
            let a = evaluate(&t, &p).unwrap();
            let ts: Vec<u8> = t.iter().map(|v| 1 - v).collect();
            let ps: Vec<u8> = p.iter().map(|v| 1 - v).collect();
            let b = evaluate(&ts, &ps).unwrap();
            prop_assert_eq!(a.recall_class0, b.recall_class1);
            prop_assert_eq!(a.recall_class1, b.recall_class0);
            prop_assert!((a.average_accuracy - b.average_accuracy).abs() < 1e-15);
            prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-15);
        }
    }
}
