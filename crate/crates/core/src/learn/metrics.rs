use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows index the true class, columns the predicted class.
pub fn confusion_matrix(classes: &[usize], truth: &[usize], predicted: &[usize]) -> Result<Vec<Vec<usize>>> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch { left: truth.len(), right: predicted.len() });
    }
    let index = |c: usize| {
        classes.iter().position(|&k| k == c).ok_or_else(|| Error::InvalidParameter(format!("label {c} not among the classes")))
    };
    let mut m = vec![vec![0; classes.len()]; classes.len()];
    for (&t, &p) in truth.iter().zip(predicted) {
        m[index(t)?][index(p)?] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total: usize,
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// Unweighted mean of the per-class F1 scores.
    pub macro_f1: f64,
    /// One entry per zero denominator that was scored as 0.
    pub warnings: Vec<String>,
}

pub fn classification_metrics(confusion: &[Vec<usize>]) -> Result<Metrics> {
    let k = confusion.len();
    if let Some(row) = confusion.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch { expected: k, got: row.len() });
    }
    let total: usize = confusion.iter().flatten().sum();
    if k == 0 || total == 0 {
        return Err(Error::EmptyConfusion);
    }
    let trace: usize = (0..k).map(|i| confusion[i][i]).sum();
    let mut warnings = vec![];
    let mut precision = Vec::with_capacity(k);
    let mut recall = Vec::with_capacity(k);
    let mut f1 = Vec::with_capacity(k);
    for c in 0..k {
        let tp = confusion[c][c] as f64;
        let predicted: usize = confusion.iter().map(|r| r[c]).sum();
        let actual: usize = confusion[c].iter().sum();
        let p = if predicted == 0 {
            warnings.push(format!("class index {c} never predicted; precision set to 0"));
            0.0
        } else {
            tp / predicted as f64
        };
        let r = if actual == 0 {
            warnings.push(format!("class index {c} absent from truth; recall set to 0"));
            0.0
        } else {
            tp / actual as f64
        };
        precision.push(p);
        recall.push(r);
        f1.push(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / k as f64;
    Ok(Metrics {
        total,
        accuracy: trace as f64 / total as f64,
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1),
        precision,
        recall,
        f1,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_diagonal() {
        let m = classification_metrics(&[vec![4, 0, 0], vec![0, 2, 0], vec![0, 0, 9]]).unwrap();
        assert_eq!((m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1), (1.0, 1.0, 1.0, 1.0));
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn two_by_two_by_hand() {
        let m = classification_metrics(&[vec![8, 2], vec![3, 7]]).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert!((m.precision[0] - 8.0 / 11.0).abs() < 1e-15);
        assert!((m.recall[0] - 0.8).abs() < 1e-15);
        // F1_0 = 16/21, F1_1 = 14/19
        let f1 = (16.0 / 21.0 + 14.0 / 19.0) / 2.0;
        assert!((m.macro_f1 - f1).abs() < 1e-12);
        assert!((m.macro_f1 - 0.749373).abs() < 1e-6);
    }

    #[test]
    fn constant_prediction() {
        let m = classification_metrics(&[vec![10, 0], vec![10, 0]]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert!((m.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn empty_and_confusion_layout() {
        assert!(matches!(classification_metrics(&[vec![0, 0], vec![0, 0]]), Err(Error::EmptyConfusion)));
        let c = confusion_matrix(&[2, 5], &[2, 2, 5], &[5, 2, 5]).unwrap();
        assert_eq!(c, vec![vec![1, 1], vec![0, 1]]);
    }
}
