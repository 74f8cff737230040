use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::BandSpec;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::signal::{TimeSeries, WindowPlan};

/// Frames × one-sided bins of power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram<T> {
    pub freqs_hz: Vec<f64>,
    pub frames: Vec<Vec<T>>,
    pub window_plan: WindowPlan,
    pub rate_hz: f64,
}

impl<T: Real> Spectrogram<T> {
    pub fn n_bins(&self) -> usize {
        self.freqs_hz.len()
    }

    /// Mean spectrum over frames.
    pub fn mean_spectrum(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.n_bins()];
        for frame in &self.frames {
            for (a, &p) in acc.iter_mut().zip(frame) {
                *a = *a + p;
            }
        }
        if !self.frames.is_empty() {
            let n = T::from_len(self.frames.len());
            acc.iter_mut().for_each(|a| *a = *a / n);
        }
        acc
    }

    /// Indices of bins with `low_hz <= f <= high_hz`.
    pub fn band_bins(&self, band: &BandSpec) -> Result<std::ops::Range<usize>> {
        band_bins(&self.freqs_hz, band.low_hz, band.high_hz)
    }
}

pub(crate) fn band_bins(freqs_hz: &[f64], low_hz: f64, high_hz: f64) -> Result<std::ops::Range<usize>> {
    const EPS: f64 = 1e-9;
    let start = freqs_hz.iter().position(|&f| f >= low_hz - EPS);
    let end = freqs_hz.iter().rposition(|&f| f <= high_hz + EPS);
    match (start, end) {
        (Some(s), Some(e)) if s <= e => Ok(s..e + 1),
        _ => Err(Error::BandOutOfRange { low_hz, high_hz }),
    }
}

/// Hann-windowed one-sided periodogram of fixed-length segments.
///
/// Power is scaled by `1 / (N * sum(w^2))` (doubled for interior bins), so the
/// bins of a frame sum to `sum((w*x)^2) / sum(w^2)`: a unit sinusoid totals 1/2
/// whatever the window.
#[derive(Clone)]
pub struct PowerEstimator<T: Real> {
    fft: Arc<dyn Fft<T>>,
    window: Vec<T>,
    scale: T,
}

impl<T: Real> PowerEstimator<T> {
    pub fn new(len: usize) -> Self {
        let two_pi = T::TAU();
        let n = T::from_len(len);
        let window: Vec<T> = (0..len)
            .map(|k| T::lit(0.5) - T::lit(0.5) * (two_pi * T::from_len(k) / n).cos())
            .collect();
        let energy: T = window.iter().map(|&w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(len);
        Self { fft, window, scale: T::one() / (n * energy) }
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn window(&self) -> &[T] {
        &self.window
    }

    pub fn bin_freqs(&self, rate_hz: f64) -> Vec<f64> {
        let n = self.len();
        (0..=n / 2).map(|b| b as f64 * rate_hz / n as f64).collect()
    }

    /// One-sided power of a segment of exactly `len()` samples.
    pub fn frame(&self, segment: &[T]) -> Vec<T> {
        let n = self.len();
        debug_assert_eq!(segment.len(), n);
        let mut buf: Vec<Complex<T>> =
            segment.iter().zip(&self.window).map(|(&x, &w)| Complex::new(x * w, T::zero())).collect();
        self.fft.process(&mut buf);
        let two = T::lit(2.0);
        (0..=n / 2)
            .map(|b| {
                let p = buf[b].norm_sqr() * self.scale;
                if b == 0 || (n % 2 == 0 && b == n / 2) {
                    p
                } else {
                    two * p
                }
            })
            .collect()
    }
}

/// Short-time power spectrum of a single-channel series.
pub fn stft_power<T: Real>(series: &TimeSeries<T>, plan: &WindowPlan) -> Result<Spectrogram<T>> {
    let x = series.single()?;
    stft_power_samples(x, series.rate_hz(), plan)
}

pub fn stft_power_samples<T: Real>(x: &[T], rate_hz: f64, plan: &WindowPlan) -> Result<Spectrogram<T>> {
    if x.len() < plan.window_len {
        return Err(Error::TooShort { needed: plan.window_len, got: x.len() });
    }
    let frame_count = (x.len() - plan.window_len) / plan.hop_len + 1;
    let plan = WindowPlan { frame_count, ..*plan };
    let est = PowerEstimator::new(plan.window_len);
    let frames = (0..frame_count).map(|f| est.frame(&x[plan.frame_range(f)])).collect();
    Ok(Spectrogram { freqs_hz: est.bin_freqs(rate_hz), frames, window_plan: plan, rate_hz })
}

/// Per-frame mean power over the bins inside `band` (edges inclusive).
pub fn band_power<T: Real>(spec: &Spectrogram<T>, band: &BandSpec) -> Result<Vec<T>> {
    let bins = spec.band_bins(band)?;
    let count = T::from_len(bins.len());
    Ok(spec.frames.iter().map(|f| f[bins.clone()].iter().copied().sum::<T>() / count).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::make_window_plan;
    use std::f64::consts::PI;

    /// Direct O(N^2) DFT power with the same window and scaling.
    fn dft_power(seg: &[f64]) -> Vec<f64> {
        let n = seg.len();
        let w: Vec<f64> = (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect();
        let energy: f64 = w.iter().map(|v| v * v).sum();
        (0..=n / 2)
            .map(|b| {
                let (mut re, mut im) = (0.0, 0.0);
                for k in 0..n {
                    let ph = -2.0 * PI * (b * k) as f64 / n as f64;
                    re += seg[k] * w[k] * ph.cos();
                    im += seg[k] * w[k] * ph.sin();
                }
                let p = (re * re + im * im) / (n as f64 * energy);
                if b == 0 || (n % 2 == 0 && b == n / 2) {
                    p
                } else {
                    2.0 * p
                }
            })
            .collect()
    }

    fn sines(parts: &[(f64, f64)], rate: f64, seconds: f64) -> TimeSeries<f64> {
        let n = (rate * seconds) as usize;
        let x = (0..n)
            .map(|k| parts.iter().map(|(f, a)| a * (2.0 * PI * f * k as f64 / rate).sin()).sum())
            .collect();
        TimeSeries::from_samples(rate, "x", "uV", x).unwrap()
    }

    fn spectrogram(s: &TimeSeries<f64>) -> Spectrogram<f64> {
        let plan = make_window_plan(s, 1.0, 0.5).unwrap();
        stft_power(s, &plan).unwrap()
    }

    #[test]
    fn zero_signal_is_zero() {
        let s = TimeSeries::from_samples(250.0, "x", "uV", vec![0.0; 1000]).unwrap();
        let sp = spectrogram(&s);
        assert_eq!(sp.n_bins(), 126);
        assert!(sp.frames.iter().flatten().all(|&p| p == 0.0));
    }

    #[test]
    fn unit_sinusoid_concentrates_at_its_bin() {
        let s = sines(&[(10.0, 1.0)], 250.0, 1.0);
        let sp = spectrogram(&s);
        let oracle = dft_power(s.single().unwrap());
        for (a, b) in sp.frames[0].iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        let total: f64 = oracle.iter().sum();
        let peak = oracle.iter().cloned().fold(0.0, f64::max);
        assert_eq!(oracle.iter().position(|&p| p == peak), Some(10));
        // Hann main lobe: 1/6, 2/3, 1/6 of the power on bins 9, 10, 11
        assert!((peak / total - 2.0 / 3.0).abs() < 1e-9);
        assert!(oracle[9..=11].iter().sum::<f64>() / total >= 0.9);
        assert!((total - 0.5).abs() < 1e-9);
    }

    #[test]
    fn two_tones_two_peaks() {
        let s = sines(&[(6.0, 1.0), (10.0, 1.0)], 250.0, 1.0);
        let oracle = dft_power(s.single().unwrap());
        let sp = spectrogram(&s);
        let mut idx: Vec<usize> = (0..oracle.len()).collect();
        idx.sort_by(|&a, &b| oracle[b].total_cmp(&oracle[a]));
        let mut top = vec![idx[0], idx[1]];
        top.sort();
        assert_eq!(top, vec![6, 10]);
        for (a, b) in sp.frames[0].iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn band_power_contrast() {
        let s = sines(&[(10.0, 1.0)], 250.0, 4.0);
        let sp = spectrogram(&s);
        let alpha = band_power(&sp, &BandSpec::new(10.0, 8.0, 12.0).unwrap()).unwrap();
        let beta = band_power(&sp, &BandSpec::new(17.0, 15.0, 19.0).unwrap()).unwrap();
        for (a, b) in alpha.iter().zip(&beta) {
            assert!(*a >= 100.0 * b);
        }
    }

    #[test]
    fn single_bin_band() {
        let s = sines(&[(7.0, 2.0)], 128.0, 3.0);
        let sp = spectrogram(&s);
        let bp = band_power(&sp, &BandSpec::new(7.0, 6.5, 7.5).unwrap()).unwrap();
        for (f, v) in sp.frames.iter().zip(&bp) {
            assert_eq!(f[7], *v);
        }
    }

    #[test]
    fn band_out_of_range() {
        let s = sines(&[(7.0, 2.0)], 128.0, 2.0);
        let sp = spectrogram(&s);
        let band = BandSpec::new(80.0, 70.0, 90.0).unwrap();
        assert!(matches!(band_power(&sp, &band), Err(Error::BandOutOfRange { .. })));
    }

    #[test]
    fn hop_shift_moves_frames() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..2000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let plan = WindowPlan::new(2000, 250.0, 1.0, 0.5).unwrap();
        let a = stft_power_samples(&x, 250.0, &plan).unwrap();
        let b = stft_power_samples(&x[125..], 250.0, &plan).unwrap();
        for f in 0..b.frames.len() {
            for (p, q) in a.frames[f + 1].iter().zip(&b.frames[f]) {
                assert!((p - q).abs() <= 1e-9 * p.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn too_short() {
        let plan = WindowPlan::new(1000, 250.0, 1.0, 0.5).unwrap();
        assert!(matches!(stft_power_samples(&[0.0f64; 100], 250.0, &plan), Err(Error::TooShort { .. })));
    }
}
