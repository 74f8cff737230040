//! Pegasos: stochastic subgradient descent on the L2-regularized hinge loss
//! `λ/2 |w|² + 1/n Σ max(0, 1 - y w·z)`, with `λ = 1 / (C n)`.
//!
//! Inputs are z-scored and augmented with a constant 1, so the bias is an
//! ordinary (regularized) weight. Each epoch visits the instances in an order
//! drawn from ChaCha8 seeded with `seed`, stream = decision-function index.
//! When attributes outnumber instances the same iterates are computed through
//! the Gram matrix.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{LinearModel, ModelKind, Standardizer, MODEL_FORMAT_VERSION};
use super::FeatureDataset;
use crate::defaults;
use crate::error::{Error, Result};
use crate::synth::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: defaults::SVM_C, epochs: defaults::SVM_EPOCHS, seed: defaults::SVM_SEED }
    }
}

pub fn train_linear_svm(ds: &FeatureDataset, params: &SvmParams) -> Result<LinearModel> {
    if !(params.c > 0.0 && params.epochs > 0) {
        return Err(Error::InvalidParameter("C and epochs must be positive".into()));
    }
    let labels = ds.classes()?;
    let classes = ds.class_set()?;
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let d = ds.n_attributes();
    if let Some(row) = ds.x.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: row.len() });
    }
    let standardizer = Standardizer::fit(&ds.x);
    let z: Vec<Vec<f64>> = ds
        .x
        .iter()
        .map(|r| {
            let mut v = standardizer.apply(r);
            v.push(1.0);
            v
        })
        .collect();
    let gram = (d + 1 > z.len()).then(|| gram_matrix(&z));
    let targets: Vec<usize> = if classes.len() == 2 { vec![classes[1]] } else { classes.clone() };
    let mut weights = Vec::with_capacity(targets.len());
    let mut biases = Vec::with_capacity(targets.len());
    for (stream, &positive) in targets.iter().enumerate() {
        let y: Vec<f64> = labels.iter().map(|&l| if l == positive { 1.0 } else { -1.0 }).collect();
        let mut w = match &gram {
            Some(k) => pegasos_dual(&z, k, &y, params, stream as u64),
            None => pegasos_primal(&z, &y, params, stream as u64),
        };
        biases.push(w.pop().unwrap_or(0.0));
        weights.push(w);
    }
    Ok(LinearModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: if classes.len() == 2 { ModelKind::SvmBinary } else { ModelKind::SvmOneVsRest },
        classes,
        weights,
        biases,
        standardization: Some(standardizer),
        hyperparams: Some(*params),
        diagnostics: None,
    })
}

/// Four interleaved partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn gram_matrix(z: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = z.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = dot(&z[i], &z[j]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

/// Iterates `(t, i)` in visiting order; `t` starts at 1.
fn schedule(n: usize, params: &SvmParams, stream: u64, mut step: impl FnMut(usize, usize)) {
    let mut r = rng(params.seed, stream);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0;
    for _ in 0..params.epochs {
        order.shuffle(&mut r);
        for &i in &order {
            t += 1;
            step(t, i);
        }
    }
}

/// `w = scale · v`, so the shrink step costs O(1).
fn pegasos_primal(z: &[Vec<f64>], y: &[f64], params: &SvmParams, stream: u64) -> Vec<f64> {
    let n = z.len();
    let lambda = 1.0 / (params.c * n as f64);
    let mut v = vec![0.0; z[0].len()];
    let mut scale = 1.0;
    schedule(n, params, stream, |t, i| {
        let margin = y[i] * scale * dot(&v, &z[i]);
        if t == 1 {
            v.iter_mut().for_each(|a| *a = 0.0);
            scale = 1.0;
        } else {
            scale *= 1.0 - 1.0 / t as f64;
        }
        if margin < 1.0 {
            let eta = 1.0 / (lambda * t as f64);
            let a = eta * y[i] / scale;
            v.iter_mut().zip(&z[i]).for_each(|(w, x)| *w += a * x);
        }
        if scale < 1e-100 {
            v.iter_mut().for_each(|a| *a *= scale);
            scale = 1.0;
        }
    });
    v.into_iter().map(|a| a * scale).collect()
}

/// Same iterates with `v = Σ coef_j z_j`.
fn pegasos_dual(z: &[Vec<f64>], k: &[Vec<f64>], y: &[f64], params: &SvmParams, stream: u64) -> Vec<f64> {
    let n = z.len();
    let lambda = 1.0 / (params.c * n as f64);
    let mut coef = vec![0.0; n];
    let mut scale = 1.0;
    schedule(n, params, stream, |t, i| {
        let margin = y[i] * scale * dot(&coef, &k[i]);
        if t == 1 {
            coef.iter_mut().for_each(|a| *a = 0.0);
            scale = 1.0;
        } else {
            scale *= 1.0 - 1.0 / t as f64;
        }
        if margin < 1.0 {
            let eta = 1.0 / (lambda * t as f64);
            coef[i] += eta * y[i] / scale;
        }
        if scale < 1e-100 {
            coef.iter_mut().for_each(|a| *a *= scale);
            scale = 1.0;
        }
    });
    let mut w = vec![0.0; z[0].len()];
    for (c, row) in coef.iter().zip(z) {
        if *c != 0.0 {
            w.iter_mut().zip(row).for_each(|(a, x)| *a += scale * c * x);
        }
    }
    w
}
