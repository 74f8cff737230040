//! Spatio-spectral decomposition: spatial filters that maximize power in a band
//! relative to the flanking bands.

use serde::{Deserialize, Serialize};

use super::filter::SosFilter;
use super::linalg::SquareMatrix;
use super::BandSpec;
use crate::defaults;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::signal::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsdParams {
    pub flank_hz: f64,
    pub gap_hz: f64,
    /// Shrinkage of the flank covariance toward a scaled identity, in `[0, 1)`.
    pub shrinkage: f64,
}

impl Default for SsdParams {
    fn default() -> Self {
        Self { flank_hz: defaults::SSD_FLANK_HZ, gap_hz: defaults::SSD_GAP_HZ, shrinkage: defaults::SSD_SHRINKAGE }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsdResult<T> {
    /// components × channels
    pub filters: Vec<Vec<T>>,
    /// channels × components
    pub patterns: Vec<Vec<T>>,
    /// Signal-to-flank power ratios, descending.
    pub eigenvalues: Vec<T>,
    /// The regularized flank covariance the filters are orthonormal under.
    pub noise_cov: SquareMatrix<T>,
}

impl<T: Real> SsdResult<T> {
    /// Time course of one component: `w_i^T x(t)`.
    pub fn component(&self, series: &TimeSeries<T>, index: usize) -> Result<Vec<T>> {
        let w = &self.filters[index];
        if w.len() != series.n_channels() {
            return Err(Error::DimensionMismatch { expected: w.len(), got: series.n_channels() });
        }
        let mut out = vec![T::zero(); series.n_samples()];
        for (row, &wc) in series.data().iter().zip(w) {
            for (o, &v) in out.iter_mut().zip(row) {
                *o = *o + wc * v;
            }
        }
        Ok(out)
    }
}

/// The two flanking bands around `band`. The lower one may degenerate to a
/// low-pass (starts at 0 Hz) or vanish if the gap reaches 0 Hz.
pub fn flank_bands(band: &BandSpec, params: &SsdParams) -> (Option<(f64, f64)>, (f64, f64)) {
    let lower_hi = band.low_hz - params.gap_hz;
    let lower = (lower_hi > 0.0).then(|| ((lower_hi - params.flank_hz).max(0.0), lower_hi));
    let upper_lo = band.high_hz + params.gap_hz;
    (lower, (upper_lo, upper_lo + params.flank_hz))
}

fn filtered_covariance<T: Real>(series: &TimeSeries<T>, low: f64, high: f64) -> Result<SquareMatrix<T>> {
    let filter = SosFilter::butterworth_bandpass(low, high, series.rate_hz())?;
    let rows: Vec<Vec<T>> = series.data().iter().map(|r| filter.filtfilt(r)).collect();
    Ok(SquareMatrix::covariance(&rows))
}

pub fn ssd<T: Real>(series: &TimeSeries<T>, band: &BandSpec, params: &SsdParams) -> Result<SsdResult<T>> {
    let c = series.n_channels();
    if c == 0 {
        return Err(Error::InvalidParameter("ssd needs at least one channel".into()));
    }
    if !(0.0..1.0).contains(&params.shrinkage) {
        return Err(Error::InvalidParameter(format!("shrinkage {} outside [0, 1)", params.shrinkage)));
    }
    let signal = filtered_covariance(series, band.low_hz, band.high_hz)?;
    let (lower, upper) = flank_bands(band, params);
    let mut noise = filtered_covariance(series, upper.0, upper.1)?;
    if let Some((lo, hi)) = lower {
        noise = noise.add_scaled(&filtered_covariance(series, lo, hi)?, T::one());
    }
    let lambda = T::lit(params.shrinkage);
    let ridge = noise.trace() / T::from_len(c) * lambda;
    let noise = noise.scale(T::one() - lambda).add_scaled(&SquareMatrix::identity(c), ridge);
    let chol = noise.cholesky().ok_or(Error::SingularNoise)?;

    // whitened signal covariance L^-1 S L^-T
    let mut m = SquareMatrix::zeros(c);
    for j in 0..c {
        let col = chol.solve_lower(&signal.column(j));
        for i in 0..c {
            m[(j, i)] = col[i];
        }
    }
    let mut whitened = SquareMatrix::zeros(c);
    for j in 0..c {
        let col = chol.solve_lower(&m.column(j));
        for i in 0..c {
            whitened[(i, j)] = col[i];
        }
    }
    for i in 0..c {
        for j in i + 1..c {
            let avg = (whitened[(i, j)] + whitened[(j, i)]) * T::lit(0.5);
            whitened[(i, j)] = avg;
            whitened[(j, i)] = avg;
        }
    }
    let (eigenvalues, vecs) = whitened.symmetric_eigen();

    let mut filters = Vec::with_capacity(c);
    for k in 0..c {
        let mut w = chol.solve_lower_transpose(&vecs.column(k));
        // sign: largest-magnitude weight positive
        let lead = w.iter().copied().fold(T::zero(), |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < T::zero() {
            w.iter_mut().for_each(|v| *v = -*v);
        }
        filters.push(w);
    }
    let mut patterns = vec![vec![T::zero(); c]; c];
    for (k, w) in filters.iter().enumerate() {
        let sw = signal.mul_vec(w);
        let mu = eigenvalues[k];
        for ch in 0..c {
            patterns[ch][k] = if mu > T::zero() { sw[ch] / mu } else { T::zero() };
        }
    }
    Ok(SsdResult { filters, patterns, eigenvalues, noise_cov: noise })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Channel;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn mixed(sources: &[(f64, Vec<f64>)], noise: f64, seed: u64, seconds: f64) -> TimeSeries<f64> {
        let rate = 250.0;
        let n = (rate * seconds) as usize;
        let c = sources[0].1.len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise).unwrap();
        let data = (0..c)
            .map(|ch| {
                (0..n)
                    .map(|k| {
                        let t = k as f64 / rate;
                        let s: f64 = sources.iter().map(|(f, mix)| mix[ch] * (2.0 * PI * f * t).sin()).sum();
                        s + normal.sample(&mut rng)
                    })
                    .collect()
            })
            .collect();
        let chans = (0..c).map(|i| Channel::new(format!("C{i}"), "uV")).collect();
        TimeSeries::new(rate, chans, data, 0.0).unwrap()
    }

    #[test]
    fn single_channel_is_power_ratio() {
        let s = mixed(&[(10.0, vec![1.0])], 0.5, 1, 20.0);
        let band = BandSpec::new(10.0, 8.0, 12.0).unwrap();
        let p = SsdParams::default();
        let r = ssd(&s, &band, &p).unwrap();
        let sig = filtered_covariance(&s, 8.0, 12.0).unwrap()[(0, 0)];
        let (lo, hi) = flank_bands(&band, &p);
        let (lo_a, lo_b) = lo.unwrap();
        let flank = filtered_covariance(&s, lo_a, lo_b).unwrap()[(0, 0)] + filtered_covariance(&s, hi.0, hi.1).unwrap()[(0, 0)];
        assert!((r.eigenvalues[0] - sig / flank).abs() < 1e-9 * (sig / flank));
        // filter is [1] up to the flank-power normalization
        assert!((r.filters[0][0] * flank.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn filters_are_noise_orthonormal() {
        let s = mixed(&[(10.0, vec![1.0, 0.4, -0.6, 0.2])], 1.0, 2, 20.0);
        let r = ssd(&s, &BandSpec::new(10.0, 8.0, 12.0).unwrap(), &SsdParams::default()).unwrap();
        assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        for i in 0..4 {
            for j in 0..4 {
                let nw = r.noise_cov.mul_vec(&r.filters[j]);
                let d: f64 = r.filters[i].iter().zip(&nw).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-9, "{i},{j}: {d}");
            }
        }
    }

    #[test]
    fn two_sources_dominate() {
        let s = mixed(
            &[(10.0, vec![1.0, 0.5, -0.3, 0.2, 0.1]), (10.5, vec![-0.2, 0.4, 1.0, -0.5, 0.3])],
            0.5,
            3,
            30.0,
        );
        let r = ssd(&s, &BandSpec::new(10.0, 8.0, 12.0).unwrap(), &SsdParams::default()).unwrap();
        assert!(r.eigenvalues[1] >= 10.0 * r.eigenvalues[2], "{:?}", r.eigenvalues);
    }

    #[test]
    fn remixing_leaves_spectrum_unchanged() {
        let s = mixed(&[(10.0, vec![1.0, 0.5, -0.3])], 1.0, 4, 20.0);
        let mix = [[1.0, 0.3, -0.2], [0.1, 0.9, 0.4], [-0.5, 0.2, 1.1]];
        let remixed: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..s.n_samples()).map(|k| (0..3).map(|j| mix[i][j] * s.data()[j][k]).sum()).collect())
            .collect();
        let s2 = TimeSeries::new(250.0, s.channels().to_vec(), remixed, 0.0).unwrap();
        let p = SsdParams { shrinkage: 0.0, ..SsdParams::default() };
        let band = BandSpec::new(10.0, 8.0, 12.0).unwrap();
        let a = ssd(&s, &band, &p).unwrap();
        let b = ssd(&s2, &band, &p).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn singular_noise_is_reported() {
        let s = TimeSeries::new(
            250.0,
            vec![Channel::new("a", "uV"), Channel::new("b", "uV")],
            vec![vec![0.0; 1000], vec![0.0; 1000]],
            0.0,
        )
        .unwrap();
        let r = ssd(&s, &BandSpec::new(10.0, 8.0, 12.0).unwrap(), &SsdParams::default());
        assert!(matches!(r, Err(Error::SingularNoise)));
    }

    #[test]
    fn flank_beyond_nyquist() {
        let s = mixed(&[(10.0, vec![1.0])], 0.1, 5, 4.0);
        let band = BandSpec::new(120.0, 118.0, 122.0).unwrap();
        assert!(matches!(ssd(&s, &band, &SsdParams::default()), Err(Error::NyquistViolation { .. })));
    }
}
