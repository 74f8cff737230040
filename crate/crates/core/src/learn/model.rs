use serde::{Deserialize, Serialize};

use super::regression::RegressionDiagnostics;
use super::svm::SvmParams;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SvmBinary,
    SvmOneVsRest,
    Regression,
}

/// Per-attribute z-scoring: `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Population standard deviation; constant attributes keep scale 1.
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut means = vec![0.0; d];
        for row in x {
            means.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x {
            var.iter_mut().zip(row.iter().zip(&means)).for_each(|(s, (v, m))| *s += (v - m) * (v - m));
        }
        let scales = var.into_iter().map(|s| (s / n).sqrt()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        Self { means, scales }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.means.iter().zip(&self.scales)).map(|(v, (m, s))| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Prediction {
    Class(usize),
    Value(f64),
}

/// Linear SVM (one weight vector per decision function) or univariate regression.
///
/// Binary SVMs hold a single decision function whose positive side is
/// `classes[1]`. One-vs-rest holds one function per entry of `classes`.
/// Regression holds `weights = [[slope]]`, `biases = [intercept]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format_version: u32,
    pub kind: ModelKind,
    #[serde(default)]
    pub classes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Standardizer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparams: Option<SvmParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<RegressionDiagnostics>,
}

impl LinearModel {
    pub fn n_attributes(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Raw scores `w·z + b`, one per decision function.
    pub fn decision_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_attributes() {
            return Err(Error::DimensionMismatch { expected: self.n_attributes(), got: x.len() });
        }
        let z = match &self.standardization {
            Some(s) => s.apply(x),
            None => x.to_vec(),
        };
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(&z).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect())
    }

    /// Binary: score ≥ 0 picks the positive class. One-vs-rest: argmax, ties to
    /// the lowest class index. Regression: `slope · x + intercept`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let scores = self.decision_scores(x)?;
        Ok(match self.kind {
            ModelKind::Regression => Prediction::Value(scores[0]),
            ModelKind::SvmBinary => Prediction::Class(if scores[0] >= 0.0 { self.classes[1] } else { self.classes[0] }),
            ModelKind::SvmOneVsRest => {
                let mut best = 0;
                for (k, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = k;
                    }
                }
                Prediction::Class(self.classes[best])
            }
        })
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        match self.predict(x)? {
            Prediction::Class(c) => Ok(c),
            Prediction::Value(_) => Err(Error::InvalidParameter("regression model has no classes".into())),
        }
    }

    pub fn predict_value(&self, x: &[f64]) -> Result<f64> {
        match self.predict(x)? {
            Prediction::Value(v) => Ok(v),
            Prediction::Class(_) => Err(Error::InvalidParameter("classifier has no real-valued output".into())),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported model format version {}", m.format_version)));
        }
        Ok(m)
    }
}
