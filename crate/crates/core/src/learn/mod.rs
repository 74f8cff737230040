//! Linear SVM, linear regression, grouped cross-validation and metrics.

mod cv;
mod metrics;
mod model;
mod regression;
mod svm;

pub use cv::{
    holdout, leave_one_person_out, leave_one_repetition_out, loro_by_condition, lopo_by_condition, ConditionRow,
    ConditionTable, EvalReport, FoldResult, FoldTable, FoldsSummary, RegressionEval, Scheme,
};
pub use metrics::{classification_metrics, confusion_matrix, Metrics};
pub use model::{LinearModel, ModelKind, Prediction, Standardizer, MODEL_FORMAT_VERSION};
pub use regression::{
    aggregate_by_condition, fit_linear_regression, lopo_regression, Aggregation, RegressionDiagnostics,
};
pub use svm::{train_linear_svm, SvmParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::PursuitInstance;
use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "values")]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Self::Classes(c) => c.len(),
            Self::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> Self {
        match self {
            Self::Classes(c) => Self::Classes(idx.iter().map(|&i| c[i]).collect()),
            Self::Values(v) => Self::Values(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Instances × attributes with labels and grouping keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDataset {
    pub x: Vec<Vec<f64>>,
    pub y: Targets,
    pub person_ids: Vec<u32>,
    pub repetition_ids: Vec<u32>,
    pub conditions: Vec<String>,
}

impl FeatureDataset {
    pub fn new(
        x: Vec<Vec<f64>>,
        y: Targets,
        person_ids: Vec<u32>,
        repetition_ids: Vec<u32>,
        conditions: Vec<String>,
    ) -> Result<Self> {
        let n = x.len();
        for len in [y.len(), person_ids.len(), repetition_ids.len(), conditions.len()] {
            if len != n {
                return Err(Error::LengthMismatch { left: n, right: len });
            }
        }
        if let Some(first) = x.first() {
            if let Some(row) = x.iter().find(|r| r.len() != first.len()) {
                return Err(Error::DimensionMismatch { expected: first.len(), got: row.len() });
            }
        }
        Ok(Self { x, y, person_ids, repetition_ids, conditions })
    }

    /// Classification dataset from pursuit instances; the instance label is the class.
    pub fn from_pursuit<T: Real>(instances: &[PursuitInstance<T>]) -> Result<Self> {
        Self::new(
            instances.iter().map(|i| i.values.iter().map(|v| v.to_f64_lossy()).collect()).collect(),
            Targets::Classes(instances.iter().map(|i| i.label).collect()),
            instances.iter().map(|i| i.person_id).collect(),
            instances.iter().map(|i| i.repetition_id).collect(),
            instances.iter().map(|i| i.condition.trajectory_key()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_attributes(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn classes(&self) -> Result<&[usize]> {
        match &self.y {
            Targets::Classes(c) => Ok(c),
            Targets::Values(_) => Err(Error::InvalidParameter("dataset holds regression targets".into())),
        }
    }

    pub fn values(&self) -> Result<&[f64]> {
        match &self.y {
            Targets::Values(v) => Ok(v),
            Targets::Classes(_) => Err(Error::InvalidParameter("dataset holds class labels".into())),
        }
    }

    /// Sorted distinct class labels.
    pub fn class_set(&self) -> Result<Vec<usize>> {
        let mut c = self.classes()?.to_vec();
        c.sort_unstable();
        c.dedup();
        Ok(c)
    }

    pub fn persons(&self) -> Vec<u32> {
        let mut p = self.person_ids.clone();
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn condition_set(&self) -> Vec<String> {
        let mut c = self.conditions.clone();
        c.sort();
        c.dedup();
        c
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: self.y.select(idx),
            person_ids: idx.iter().map(|&i| self.person_ids[i]).collect(),
            repetition_ids: idx.iter().map(|&i| self.repetition_ids[i]).collect(),
            conditions: idx.iter().map(|&i| self.conditions[i].clone()).collect(),
        }
    }

    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        self.subset(&idx)
    }
}
