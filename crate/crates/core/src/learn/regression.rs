use serde::{Deserialize, Serialize};

use super::cv::{EvalReport, FoldResult, RegressionEval, Scheme};
use super::model::{LinearModel, ModelKind, MODEL_FORMAT_VERSION};
use super::{FeatureDataset, Targets};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionDiagnostics {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of x and y.
    pub r: f64,
    pub r2: f64,
    /// `sqrt(SS_res / n)`.
    pub rmse: f64,
    /// `SS_reg / (SS_res / (n - 2))`; `None` when the residuals vanish.
    pub f: Option<f64>,
}

/// Ordinary least squares `y = slope · x + intercept`.
pub fn fit_linear_regression(x: &[f64], y: &[f64]) -> Result<LinearModel> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::ConstantPredictor);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let ss_reg = (syy - ss_res).max(0.0);
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    let r = if syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
    let f = (ss_res > 0.0).then(|| ss_reg / (ss_res / (nf - 2.0)));
    Ok(LinearModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::Regression,
        classes: vec![],
        weights: vec![vec![slope]],
        biases: vec![intercept],
        standardization: None,
        hyperparams: None,
        diagnostics: Some(RegressionDiagnostics { n, slope, intercept, r, r2, rmse: (ss_res / nf).sqrt(), f }),
    })
}

/// How per-person points are formed before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Every instance is a point.
    #[default]
    None,
    /// One point per (person, condition): the mean of x and of y.
    MeanPerCondition,
}

/// Collapse instances to one mean point per (person, condition).
pub fn aggregate_by_condition(ds: &FeatureDataset) -> Result<FeatureDataset> {
    let y = ds.values()?;
    let mut keys: Vec<(u32, String)> = ds.person_ids.iter().copied().zip(ds.conditions.iter().cloned()).collect();
    keys.sort();
    keys.dedup();
    let d = ds.n_attributes();
    let mut x_out = vec![];
    let mut y_out = vec![];
    for (p, c) in &keys {
        let idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.person_ids[i] == *p && &ds.conditions[i] == c).collect();
        let m = idx.len() as f64;
        x_out.push((0..d).map(|j| idx.iter().map(|&i| ds.x[i][j]).sum::<f64>() / m).collect());
        y_out.push(idx.iter().map(|&i| y[i]).sum::<f64>() / m);
    }
    FeatureDataset::new(
        x_out,
        Targets::Values(y_out),
        keys.iter().map(|k| k.0).collect(),
        vec![0; keys.len()],
        keys.into_iter().map(|k| k.1).collect(),
    )
}

/// Leave-one-person-out univariate regression; RMSE and R² pooled over all
/// held-out points.
pub fn lopo_regression(ds: &FeatureDataset, aggregation: Aggregation) -> Result<EvalReport> {
    if ds.n_attributes() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: ds.n_attributes() });
    }
    let ds = match aggregation {
        Aggregation::None => ds.clone(),
        Aggregation::MeanPerCondition => aggregate_by_condition(ds)?,
    };
    let persons = ds.persons();
    if persons.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: persons.len() });
    }
    let y = ds.values()?;
    let mut truth = vec![];
    let mut predicted = vec![];
    let mut folds = vec![];
    for (fold, &p) in persons.iter().enumerate() {
        let train = ds.filter(|i| ds.person_ids[i] != p);
        assert!(!train.person_ids.contains(&p));
        let xs: Vec<f64> = train.x.iter().map(|r| r[0]).collect();
        let model = fit_linear_regression(&xs, train.values()?)?;
        let test: Vec<usize> = (0..ds.len()).filter(|&i| ds.person_ids[i] == p).collect();
        let mut ss = 0.0;
        for &i in &test {
            let v = model.predict_value(&ds.x[i])?;
            ss += (y[i] - v).powi(2);
            truth.push(y[i]);
            predicted.push(v);
        }
        folds.push(FoldResult {
            fold,
            held_out: format!("person {p}"),
            n_train: train.len(),
            n_test: test.len(),
            accuracy: None,
            rmse: Some((ss / test.len() as f64).sqrt()),
            metrics: None,
        });
    }
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let ss_res: f64 = truth.iter().zip(&predicted).map(|(t, p)| (t - p).powi(2)).sum();
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let xs: Vec<f64> = ds.x.iter().map(|r| r[0]).collect();
    let full = fit_linear_regression(&xs, y)?.diagnostics;
    Ok(EvalReport {
        scheme: Scheme::LopoRegress,
        seed: None,
        classes: vec![],
        confusion: vec![],
        pooled: None,
        fold_averaged: None,
        regression: Some(RegressionEval {
            n: truth.len(),
            rmse: (ss_res / n).sqrt(),
            r2: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { f64::NAN },
            full_fit: full,
        }),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::rng;
    use rand_distr::{Distribution, Normal, Uniform};

    #[test]
    fn perfect_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let d = fit_linear_regression(&x, &y).unwrap().diagnostics.unwrap();
        assert!((d.slope - 2.0).abs() < 1e-12 && (d.intercept - 1.0).abs() < 1e-12);
        assert_eq!(d.r2, 1.0);
        assert!(d.rmse < 1e-12);
    }

    #[test]
    fn independent_noise_has_low_r2() {
        let mut r = rng(4, 0);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..1000).map(|_| u.sample(&mut r)).collect();
        let y: Vec<f64> = (0..1000).map(|_| u.sample(&mut r)).collect();
        let d = fit_linear_regression(&x, &y).unwrap().diagnostics.unwrap();
        assert!(d.r2 <= 0.1);
        assert!((0.0..=1.0).contains(&d.r2));
    }

    #[test]
    fn f_statistic_by_hand() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 5.0];
        let d = fit_linear_regression(&x, &y).unwrap().diagnostics.unwrap();
        // slope 1.1, intercept 0, SS_res 2.7, SS_tot 8.75
        assert!((d.slope - 1.1).abs() < 1e-12 && d.intercept.abs() < 1e-12);
        assert!((d.r2 - (1.0 - 2.7 / 8.75)).abs() < 1e-12);
        assert!((d.f.unwrap() - 6.05 / 1.35).abs() < 1e-9);
        assert!((d.rmse - (2.7f64 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_linear_regression(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::ConstantPredictor)));
        assert!(matches!(fit_linear_regression(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::TooFewPoints { .. })));
    }

    fn shared_slope(seed: u64, sigma: f64) -> FeatureDataset {
        let mut r = rng(seed, 0);
        let u = Uniform::new(0.0, 2.0).unwrap();
        let noise = Normal::new(0.0, sigma.max(1e-300)).unwrap();
        let (mut x, mut y, mut p, mut c) = (vec![], vec![], vec![], vec![]);
        for person in 0..17u32 {
            for cond in ["a", "b", "c"] {
                let v = u.sample(&mut r);
                x.push(vec![v]);
                y.push(0.8 * v + 0.1 + if sigma > 0.0 { noise.sample(&mut r) } else { 0.0 });
                p.push(person);
                c.push(cond.to_string());
            }
        }
        FeatureDataset::new(x, Targets::Values(y), p, vec![0; 51], c).unwrap()
    }

    #[test]
    fn lopo_exact_line() {
        let rep = lopo_regression(&shared_slope(1, 0.0), Aggregation::None).unwrap();
        let reg = rep.regression.unwrap();
        assert!(reg.rmse < 1e-12 && (reg.r2 - 1.0).abs() < 1e-12);
        assert_eq!(rep.folds.len(), 17);
        assert_eq!(reg.n, 51);
    }

    #[test]
    fn lopo_noisy_over_seeds() {
        for seed in 0..30 {
            let reg = lopo_regression(&shared_slope(seed, 0.05), Aggregation::MeanPerCondition).unwrap().regression.unwrap();
            assert!(reg.rmse <= 0.1, "seed {seed}: {}", reg.rmse);
        }
    }

    #[test]
    fn aggregation_means() {
        let ds = FeatureDataset::new(
            vec![vec![1.0], vec![3.0], vec![10.0]],
            Targets::Values(vec![2.0, 4.0, 7.0]),
            vec![1, 1, 1],
            vec![0, 1, 0],
            vec!["a".into(), "a".into(), "b".into()],
        )
        .unwrap();
        let a = aggregate_by_condition(&ds).unwrap();
        assert_eq!(a.x, vec![vec![2.0], vec![10.0]]);
        assert_eq!(a.values().unwrap(), &[3.0, 7.0]);
    }
}
