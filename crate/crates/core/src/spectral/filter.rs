//! Butterworth band-pass realized as second-order sections and run forward-backward.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::signal::TimeSeries;

/// Prototype order. A band-pass doubles it, so the realized filter is 4th order.
const PROTOTYPE_ORDER: usize = 2;

/// One biquad, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b[0] + z1 * self.b[1] + z2 * self.b[2]) / (self.a[0] + z1 * self.a[1] + z2 * self.a[2])
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }
}

/// Cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

impl SosFilter {
    /// Butterworth band-pass `[low_hz, high_hz]`; `low_hz == 0` gives a 4th-order low-pass.
    pub fn butterworth_bandpass(low_hz: f64, high_hz: f64, rate_hz: f64) -> Result<Self> {
        let nyquist_hz = rate_hz / 2.0;
        if high_hz >= nyquist_hz {
            return Err(Error::NyquistViolation { freq_hz: high_hz, nyquist_hz });
        }
        if !(low_hz >= 0.0 && low_hz < high_hz) {
            return Err(Error::InvalidParameter(format!("band {low_hz}-{high_hz} Hz")));
        }
        let fs2 = 2.0 * rate_hz;
        let prewarp = |f: f64| fs2 * (std::f64::consts::PI * f / rate_hz).tan();
        let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);
        let omega_hi = prewarp(high_hz);

        let mut sections = Vec::new();
        let reference_w;
        if low_hz == 0.0 {
            let order = 2 * PROTOTYPE_ORDER;
            for p in upper_prototype_poles(order) {
                sections.push(section_from_pole(bilinear(p * omega_hi), [1.0, 2.0, 1.0]));
            }
            reference_w = 0.0;
        } else {
            let omega_lo = prewarp(low_hz);
            let omega0_sq = omega_lo * omega_hi;
            let bw = omega_hi - omega_lo;
            // s^2 - p*bw*s + omega0^2 = 0 per prototype pole; the conjugate prototype
            // pole yields the conjugate roots, which the section adds implicitly.
            for p in upper_prototype_poles(PROTOTYPE_ORDER) {
                let pb = p * bw;
                let disc = (pb * pb - 4.0 * omega0_sq).sqrt();
                for root in [(pb + disc) / 2.0, (pb - disc) / 2.0] {
                    sections.push(section_from_pole(bilinear(root), [1.0, 0.0, -1.0]));
                }
            }
            reference_w = 2.0 * (omega0_sq.sqrt() / fs2).atan();
        }
        for s in &mut sections {
            let g = s.response(reference_w).norm();
            s.b.iter_mut().for_each(|b| *b /= g);
        }
        Ok(Self { sections })
    }

    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64, rate_hz: f64) -> Complex64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / rate_hz;
        self.sections.iter().map(|s| s.response(w)).product()
    }

    /// Edge padding: the scipy default or enough samples for the slowest pole
    /// to decay by 60 dB, whichever is longer.
    pub fn pad_len(&self) -> usize {
        let slowest = self.sections.iter().map(|s| s.a[2].abs().sqrt()).fold(0.0, f64::max);
        let settle = if slowest > 0.0 && slowest < 1.0 { (3.0 * std::f64::consts::LN_10 / -slowest.ln()).ceil() as usize } else { 0 };
        settle.max(3 * (2 * self.sections.len() + 1))
    }

    /// Steady-state section states for a unit step input.
    fn step_states(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = s.dc_gain();
                let z2 = level * (s.b[2] - s.a[2] * g);
                let z1 = level * (g - s.b[0]);
                level *= g;
                [z1, z2]
            })
            .collect()
    }

    fn run<T: Real>(&self, x: &mut [T], zi: &[[f64; 2]]) {
        let x0 = x[0];
        for (s, z) in self.sections.iter().zip(zi) {
            let (b0, b1, b2) = (T::lit(s.b[0]), T::lit(s.b[1]), T::lit(s.b[2]));
            let (a1, a2) = (T::lit(s.a[1]), T::lit(s.a[2]));
            let mut z1 = T::lit(z[0]) * x0;
            let mut z2 = T::lit(z[1]) * x0;
            for v in x.iter_mut() {
                let xin = *v;
                let y = b0 * xin + z1;
                z1 = b1 * xin - a1 * y + z2;
                z2 = b2 * xin - a2 * y;
                *v = y;
            }
        }
    }

    /// Zero-phase forward-backward application with mirror (even) padding and
    /// steady-state initial conditions.
    pub fn filtfilt<T: Real>(&self, x: &[T]) -> Vec<T> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = self.pad_len().min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| x[n - 1 - i]));

        let zi = self.step_states();
        self.run(&mut ext, &zi);
        ext.reverse();
        self.run(&mut ext, &zi);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

fn upper_prototype_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .filter(|p| p.im > 0.0)
        .collect()
}

fn section_from_pole(z: Complex64, b: [f64; 3]) -> Biquad {
    Biquad { b, a: [1.0, -2.0 * z.re, z.norm_sqr()] }
}

/// Zero-phase band-pass of every channel.
pub fn bandpass<T: Real>(series: &TimeSeries<T>, low_hz: f64, high_hz: f64) -> Result<TimeSeries<T>> {
    let filter = SosFilter::butterworth_bandpass(low_hz, high_hz, series.rate_hz())?;
    series.map_rows(|row| Ok(filter.filtfilt(row)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, rate: f64, seconds: f64) -> Vec<f64> {
        let n = (rate * seconds) as usize;
        (0..n).map(|k| (2.0 * PI * freq * k as f64 / rate).sin()).collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    /// Least-squares amplitude of a known-frequency sinusoid.
    fn fitted_amplitude(x: &[f64], freq: f64, rate: f64) -> f64 {
        let (mut ss, mut cc, mut sc, mut xs, mut xc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (k, &v) in x.iter().enumerate() {
            let ph = 2.0 * PI * freq * k as f64 / rate;
            let (s, c) = ph.sin_cos();
            ss += s * s;
            cc += c * c;
            sc += s * c;
            xs += v * s;
            xc += v * c;
        }
        let det = ss * cc - sc * sc;
        let a = (xs * cc - xc * sc) / det;
        let b = (xc * ss - xs * sc) / det;
        a.hypot(b)
    }

    #[test]
    fn passes_in_band_sinusoid() {
        let x = sine(10.0, 250.0, 10.0);
        let s = TimeSeries::from_samples(250.0, "Oz", "uV", x).unwrap();
        let y = bandpass(&s, 8.0, 12.0).unwrap();
        let y = y.single().unwrap();
        let interior = &y[500..2000];
        let amp = fitted_amplitude(interior, 10.0, 250.0);
        assert!((0.9..=1.1).contains(&amp), "amplitude {amp}");
    }

    #[test]
    fn rejects_line_noise() {
        let x = sine(50.0, 250.0, 10.0);
        let s = TimeSeries::from_samples(250.0, "Oz", "uV", x.clone()).unwrap();
        let y = bandpass(&s, 0.5, 20.0).unwrap();
        let ratio = rms(y.single().unwrap()) / rms(&x);
        assert!(ratio <= 0.1, "rms ratio {ratio}");
    }

    #[test]
    fn removes_dc() {
        let s = TimeSeries::from_samples(250.0, "Oz", "uV", vec![37.5; 2500]).unwrap();
        let y = bandpass(&s, 0.5, 20.0).unwrap();
        let m = y.single().unwrap().iter().sum::<f64>() / 2500.0;
        assert!(m.abs() < 1e-3 * 37.5, "mean {m}");
    }

    #[test]
    fn octave_stopband() {
        for (lo, hi) in [(0.5, 20.0), (8.0, 12.0), (3.0, 7.0), (30.0, 60.0)] {
            let f = SosFilter::butterworth_bandpass(lo, hi, 250.0).unwrap();
            // forward-backward squares the magnitude
            let centre = (lo * hi as f64).sqrt();
            let pass = f.response(centre, 250.0).norm_sqr();
            // amplitude gain of the forward-backward pass is |H|^2
            assert!((0.9..=1.1).contains(&pass));
            for probe in [lo / 2.0, hi * 2.0] {
                if probe < 125.0 {
                    let db = 20.0 * f.response(probe, 250.0).norm_sqr().log10();
                    assert!(db <= -20.0, "{lo}-{hi} at {probe}: {db} dB");
                }
            }
        }
    }

    #[test]
    fn lowpass_when_low_is_zero() {
        let f = SosFilter::butterworth_bandpass(0.0, 2.0, 250.0).unwrap();
        assert!((f.response(0.0, 250.0).norm() - 1.0).abs() < 1e-9);
        assert!(f.response(8.0, 250.0).norm() < 0.01);
    }

    #[test]
    fn nyquist_is_rejected() {
        let s = TimeSeries::from_samples(100.0, "a", "uV", vec![0.0; 100]).unwrap();
        assert!(matches!(bandpass(&s, 1.0, 50.0), Err(Error::NyquistViolation { .. })));
        assert!(matches!(bandpass(&s, 5.0, 2.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn linear_in_input() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = SosFilter::butterworth_bandpass(0.5, 20.0, 250.0).unwrap();
        let (a, b) = (2.5, -0.75);
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = f.filtfilt(&mix);
        let fx = f.filtfilt(&x);
        let fy = f.filtfilt(&y);
        let scale = lhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..1000 {
            let rhs = a * fx[k] + b * fy[k];
            assert!((lhs[k] - rhs).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn f32_path_agrees_with_f64() {
        let x = sine(10.0, 250.0, 4.0);
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let f = SosFilter::butterworth_bandpass(8.0, 12.0, 250.0).unwrap();
        let a = f.filtfilt(&x);
        let b = f.filtfilt(&xf);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - *q as f64).abs() < 1e-3);
        }
    }
}
