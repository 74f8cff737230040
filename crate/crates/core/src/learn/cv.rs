use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, confusion_matrix, Metrics};
use super::model::LinearModel;
use super::regression::RegressionDiagnostics;
use super::FeatureDataset;
use crate::error::{Error, Result};
use crate::synth::rng;

const LORO_STREAM: u64 = 4 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    LopoClassify,
    LoroClassify,
    LopoRegress,
    Holdout,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LopoClassify => "lopo-classify",
            Self::LoroClassify => "loro-classify",
            Self::LopoRegress => "lopo-regress",
            Self::Holdout => "holdout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// What the fold tested on, e.g. `person 4` or `repetitions [1, 5]`.
    pub held_out: String,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: Option<f64>,
    pub rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

/// Unweighted means of the per-fold metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldsSummary {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl FoldsSummary {
    fn mean(ms: &[&Metrics]) -> Option<Self> {
        if ms.is_empty() {
            return None;
        }
        let n = ms.len() as f64;
        let avg = |f: fn(&Metrics) -> f64| ms.iter().map(|m| f(m)).sum::<f64>() / n;
        Some(Self {
            accuracy: avg(|m| m.accuracy),
            macro_precision: avg(|m| m.macro_precision),
            macro_recall: avg(|m| m.macro_recall),
            macro_f1: avg(|m| m.macro_f1),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionEval {
    pub n: usize,
    pub rmse: f64,
    pub r2: f64,
    /// Fit on every point, for reporting slope/intercept/F.
    pub full_fit: Option<RegressionDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub seed: Option<u64>,
    pub classes: Vec<usize>,
    /// Pooled over every held-out prediction; rows = truth.
    pub confusion: Vec<Vec<usize>>,
    /// Headline metrics, from the pooled confusion.
    pub pooled: Option<Metrics>,
    pub fold_averaged: Option<FoldsSummary>,
    pub folds: Vec<FoldResult>,
    pub regression: Option<RegressionEval>,
}

impl EvalReport {
    pub fn accuracy(&self) -> Option<f64> {
        self.pooled.as_ref().map(|m| m.accuracy)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Train on `train`, predict `test`, accumulate into the pooled lists.
fn run_fold<F>(
    ds: &FeatureDataset,
    classes: &[usize],
    train_idx: &[usize],
    test_idx: &[usize],
    fold: usize,
    held_out: String,
    trainer: &F,
    truth: &mut Vec<usize>,
    predicted: &mut Vec<usize>,
) -> Result<(FoldResult, Option<u64>)>
where
    F: Fn(&FeatureDataset) -> Result<LinearModel>,
{
    let train = ds.subset(train_idx);
    if train.class_set()?.len() < 2 {
        return Err(Error::DegenerateFold(format!("training set for {held_out} holds a single class")));
    }
    let model = trainer(&train)?;
    let labels = ds.classes()?;
    let mut fold_truth = Vec::with_capacity(test_idx.len());
    let mut fold_pred = Vec::with_capacity(test_idx.len());
    for &i in test_idx {
        fold_truth.push(labels[i]);
        fold_pred.push(model.predict_class(&ds.x[i])?);
    }
    let metrics = classification_metrics(&confusion_matrix(classes, &fold_truth, &fold_pred)?)?;
    truth.extend(fold_truth);
    predicted.extend(fold_pred);
    Ok((
        FoldResult {
            fold,
            held_out,
            n_train: train_idx.len(),
            n_test: test_idx.len(),
            accuracy: Some(metrics.accuracy),
            rmse: None,
            metrics: Some(metrics),
        },
        model.hyperparams.map(|h| h.seed),
    ))
}

fn assemble(
    scheme: Scheme,
    seed: Option<u64>,
    classes: Vec<usize>,
    truth: &[usize],
    predicted: &[usize],
    folds: Vec<FoldResult>,
) -> Result<EvalReport> {
    let confusion = confusion_matrix(&classes, truth, predicted)?;
    let pooled = classification_metrics(&confusion)?;
    let per_fold: Vec<&Metrics> = folds.iter().filter_map(|f| f.metrics.as_ref()).collect();
    let fold_averaged = FoldsSummary::mean(&per_fold);
    Ok(EvalReport { scheme, seed, classes, confusion, pooled: Some(pooled), fold_averaged, folds, regression: None })
}

/// One fold per person; the held-out person is never part of its training set.
pub fn leave_one_person_out<F>(ds: &FeatureDataset, trainer: F) -> Result<EvalReport>
where
    F: Fn(&FeatureDataset) -> Result<LinearModel>,
{
    let persons = ds.persons();
    if persons.len() < 2 {
        return Err(Error::SinglePerson);
    }
    let classes = ds.class_set()?;
    let (mut truth, mut predicted, mut folds) = (vec![], vec![], vec![]);
    let mut seed = None;
    for (fold, &p) in persons.iter().enumerate() {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| ds.person_ids[i] == p);
        assert!(train.iter().all(|&i| ds.person_ids[i] != p), "held-out person {p} leaked into training");
        let (r, s) = run_fold(ds, &classes, &train, &test, fold, format!("person {p}"), &trainer, &mut truth, &mut predicted)
            .map_err(|e| match e {
                Error::DegenerateFold(_) => Error::DegenerateFold(format!("person {p}")),
                e => e,
            })?;
        seed = seed.or(s);
        folds.push(r);
    }
    assemble(Scheme::LopoClassify, seed, classes, &truth, &predicted, folds)
}

/// Train on everyone outside `test_persons`, test on them.
pub fn holdout<F>(ds: &FeatureDataset, test_persons: &[u32], trainer: F) -> Result<EvalReport>
where
    F: Fn(&FeatureDataset) -> Result<LinearModel>,
{
    let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| test_persons.contains(&ds.person_ids[i]));
    if test.is_empty() || train.is_empty() {
        return Err(Error::InvalidParameter("holdout needs both training and test persons".into()));
    }
    let classes = ds.class_set()?;
    let (mut truth, mut predicted) = (vec![], vec![]);
    let (r, seed) = run_fold(ds, &classes, &train, &test, 0, format!("persons {test_persons:?}"), &trainer, &mut truth, &mut predicted)?;
    assemble(Scheme::Holdout, seed, classes, &truth, &predicted, vec![r])
}

/// Repetition-grouped k-fold inside one person and one condition.
///
/// With exactly `k` repetitions each is its own fold. With more, the
/// repetition ids are shuffled (ChaCha8, `seed`) and dealt round-robin.
pub fn leave_one_repetition_out<F>(ds: &FeatureDataset, k: usize, trainer: F, seed: u64) -> Result<EvalReport>
where
    F: Fn(&FeatureDataset) -> Result<LinearModel>,
{
    if ds.persons().len() > 1 || ds.condition_set().len() > 1 {
        return Err(Error::InvalidParameter("repetition folds need a single person and condition".into()));
    }
    let mut reps = ds.repetition_ids.clone();
    reps.sort_unstable();
    reps.dedup();
    if k < 2 || reps.len() < k {
        return Err(Error::TooFewRepetitions { needed: k.max(2), got: reps.len() });
    }
    if reps.len() > k {
        reps.shuffle(&mut rng(seed, LORO_STREAM));
    }
    let groups: Vec<Vec<u32>> = (0..k)
        .map(|g| {
            let mut v: Vec<u32> = reps.iter().skip(g).step_by(k).copied().collect();
            v.sort_unstable();
            v
        })
        .collect();
    let classes = ds.class_set()?;
    let (mut truth, mut predicted, mut folds) = (vec![], vec![], vec![]);
    for (fold, group) in groups.iter().enumerate() {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| group.contains(&ds.repetition_ids[i]));
        let (r, _) = run_fold(ds, &classes, &train, &test, fold, format!("repetitions {group:?}"), &trainer, &mut truth, &mut predicted)?;
        folds.push(r);
    }
    assemble(Scheme::LoroClassify, Some(seed), classes, &truth, &predicted, folds)
}

/// Number of repetition folds per trajectory condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTable {
    pub entries: Vec<(String, usize)>,
}

impl Default for FoldTable {
    fn default() -> Self {
        let e = [("rectangle-slow", 2), ("rectangle-fast", 3), ("circle-slow", 5), ("circle-fast", 7), ("sine-slow", 2), ("sine-fast", 3)];
        Self { entries: e.iter().map(|&(c, k)| (c.to_string(), k)).collect() }
    }
}

impl FoldTable {
    pub fn k_for(&self, condition: &str) -> Result<usize> {
        self.entries
            .iter()
            .find(|(c, _)| c == condition)
            .map(|&(_, k)| k)
            .ok_or_else(|| Error::InvalidParameter(format!("no fold count for condition `{condition}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub condition: String,
    pub scheme: Scheme,
    pub folds: usize,
    pub persons: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-condition accuracy/precision/recall/F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionTable {
    pub rows: Vec<ConditionRow>,
}

impl fmt::Display for ConditionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:<14} {:>5} {:>8} {:>9} {:>9} {:>7} {:>7}", "condition", "scheme", "folds", "persons", "accuracy", "precision", "recall", "f1")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<16} {:<14} {:>5} {:>8} {:>9.3} {:>9.3} {:>7.3} {:>7.3}",
                r.condition,
                r.scheme.as_str(),
                r.folds,
                r.persons,
                r.accuracy,
                r.precision,
                r.recall,
                r.f1
            )?;
        }
        Ok(())
    }
}

/// Person-dependent evaluation: repetition folds for each (person, condition),
/// with `k` from `table`; metrics averaged per person, then across persons.
pub fn loro_by_condition<F>(ds: &FeatureDataset, table: &FoldTable, trainer: F, seed: u64) -> Result<(ConditionTable, Vec<EvalReport>)>
where
    F: Fn(&FeatureDataset) -> Result<LinearModel>,
{
    let mut rows = vec![];
    let mut reports = vec![];
    for cond in ds.condition_set() {
        let k = table.k_for(&cond)?;
        let in_cond = ds.filter(|i| ds.conditions[i] == cond);
        let mut per_person = vec![];
        for p in in_cond.persons() {
            let sub = in_cond.filter(|i| in_cond.person_ids[i] == p);
            let rep = leave_one_repetition_out(&sub, k, &trainer, seed)?;
            debug_assert_eq!(rep.folds.len(), k);
            per_person.push(rep.pooled.clone().ok_or(Error::EmptyConfusion)?);
            reports.push(rep);
        }
        let n = per_person.len() as f64;
        let avg = |f: fn(&Metrics) -> f64| per_person.iter().map(f).sum::<f64>() / n;
        rows.push(ConditionRow {
            condition: cond,
            scheme: Scheme::LoroClassify,
            folds: k,
            persons: per_person.len(),
            accuracy: avg(|m| m.accuracy),
            precision: avg(|m| m.macro_precision),
            recall: avg(|m| m.macro_recall),
            f1: avg(|m| m.macro_f1),
        });
    }
    Ok((ConditionTable { rows }, reports))
}

/// Person-independent evaluation: leave-one-person-out inside each condition.
pub fn lopo_by_condition<F>(ds: &FeatureDataset, trainer: F) -> Result<(ConditionTable, Vec<EvalReport>)>
where
    F: Fn(&FeatureDataset) -> Result<LinearModel>,
{
    let mut rows = vec![];
    let mut reports = vec![];
    for cond in ds.condition_set() {
        let sub = ds.filter(|i| ds.conditions[i] == cond);
        let rep = leave_one_person_out(&sub, &trainer)?;
        let m = rep.pooled.clone().ok_or(Error::EmptyConfusion)?;
        rows.push(ConditionRow {
            condition: cond,
            scheme: Scheme::LopoClassify,
            folds: rep.folds.len(),
            persons: rep.folds.len(),
            accuracy: m.accuracy,
            precision: m.macro_precision,
            recall: m.macro_recall,
            f1: m.macro_f1,
        });
        reports.push(rep);
    }
    Ok((ConditionTable { rows }, reports))
}
