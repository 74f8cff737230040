//! EEG workload measures: band-power courses, baseline normalization, the
//! theta/alpha ratio and frontal blink counting.

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::signal::{channel_mean, select_channels, trim_edges, TimeSeries};
use crate::spectral::{band_power, bandpass, ssd, stft_power_samples, BandSpec, SsdParams};

/// Where the electrode average happens relative to the spectral estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElectrodeReduction {
    /// Spectrum per electrode, then average the band powers.
    #[default]
    PowerThenAverage,
    /// Average the filtered signals, then one spectrum.
    AverageThenPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EegParams {
    pub prefilter_low_hz: f64,
    pub prefilter_high_hz: f64,
    pub window_s: f64,
    pub hop_s: f64,
    /// Trim applied before anything else; `None` when the caller already trimmed.
    pub edge_trim_s: Option<f64>,
    pub reduction: ElectrodeReduction,
    pub ssd: SsdParams,
}

impl Default for EegParams {
    fn default() -> Self {
        Self {
            prefilter_low_hz: defaults::PREFILTER_LOW_HZ,
            prefilter_high_hz: defaults::PREFILTER_HIGH_HZ,
            window_s: defaults::WINDOW_S,
            hop_s: defaults::HOP_S,
            edge_trim_s: None,
            reduction: ElectrodeReduction::default(),
            ssd: SsdParams::default(),
        }
    }
}

/// Band power per STFT frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCourse<T> {
    pub values: Vec<T>,
    /// Frame centers, absolute seconds.
    pub frame_times_s: Vec<f64>,
    pub band: BandSpec,
    pub normalized: bool,
}

impl<T: Real> PowerCourse<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> Option<T> {
        crate::num::mean(&self.values)
    }
}

fn prepare<T: Real, S: AsRef<str>>(series: &TimeSeries<T>, electrodes: &[S], params: &EegParams) -> Result<TimeSeries<T>> {
    // fixed reduction order regardless of request order
    let mut labels: Vec<&str> = electrodes.iter().map(AsRef::as_ref).collect();
    labels.sort_unstable();
    let trimmed;
    let base = match params.edge_trim_s {
        Some(edge) => {
            trimmed = trim_edges(series, edge)?;
            &trimmed
        }
        None => series,
    };
    let selected = select_channels(base, &labels)?;
    bandpass(&selected, params.prefilter_low_hz, params.prefilter_high_hz)
}

fn course_from_rows<T: Real>(
    rows: &[&[T]],
    rate_hz: f64,
    t0_s: f64,
    band: &BandSpec,
    params: &EegParams,
) -> Result<PowerCourse<T>> {
    let n = rows.first().map_or(0, |r| r.len());
    let plan = crate::signal::WindowPlan::new(n, rate_hz, params.window_s, params.hop_s)?;
    let mut acc: Option<Vec<T>> = None;
    for row in rows {
        let spec = stft_power_samples(row, rate_hz, &plan)?;
        let bp = band_power(&spec, band)?;
        match acc.as_mut() {
            None => acc = Some(bp),
            Some(a) => a.iter_mut().zip(&bp).for_each(|(x, &y)| *x = *x + y),
        }
    }
    let mut values = acc.unwrap_or_default();
    let k = T::from_len(rows.len().max(1));
    values.iter_mut().for_each(|v| *v = *v / k);
    let frame_times_s = (0..plan.frame_count).map(|f| t0_s + plan.frame_center_offset_s(f, rate_hz)).collect();
    Ok(PowerCourse { values, frame_times_s, band: *band, normalized: false })
}

/// select → band-pass → STFT → band power, averaged over `electrodes`.
pub fn iaf_course<T: Real, S: AsRef<str>>(
    series: &TimeSeries<T>,
    iaf: &BandSpec,
    electrodes: &[S],
    params: &EegParams,
) -> Result<PowerCourse<T>> {
    let filtered = prepare(series, electrodes, params)?;
    match params.reduction {
        ElectrodeReduction::PowerThenAverage => {
            let rows: Vec<&[T]> = filtered.data().iter().map(Vec::as_slice).collect();
            course_from_rows(&rows, filtered.rate_hz(), filtered.t0_s(), iaf, params)
        }
        ElectrodeReduction::AverageThenPower => {
            let mean = channel_mean(&filtered)?;
            course_from_rows(&[mean.single()?], mean.rate_hz(), mean.t0_s(), iaf, params)
        }
    }
}

/// Frontal theta (5 ± 2 Hz). With two or more electrodes the first SSD
/// component is analysed; a single electrode is used directly.
pub fn theta_course<T: Real, S: AsRef<str>>(
    series: &TimeSeries<T>,
    electrodes: &[S],
    params: &EegParams,
) -> Result<PowerCourse<T>> {
    let band = BandSpec::theta();
    let filtered = prepare(series, electrodes, params)?;
    let silent = filtered.data().iter().flatten().all(|v| *v == T::zero());
    let component;
    let row: &[T] = if filtered.n_channels() >= 2 && !silent {
        let decomposition = ssd(&filtered, &band, &params.ssd)?;
        component = decomposition.component(&filtered, 0)?;
        &component
    } else if filtered.n_channels() >= 2 {
        &filtered.data()[0]
    } else {
        filtered.single()?
    };
    course_from_rows(&[row], filtered.rate_hz(), filtered.t0_s(), &band, params)
}

/// Divide by the mean of a baseline course of the same band.
pub fn normalize_course<T: Real>(course: &PowerCourse<T>, baseline: &PowerCourse<T>) -> Result<PowerCourse<T>> {
    if course.band != baseline.band {
        return Err(Error::InvalidParameter(format!(
            "course band {} differs from baseline band {}",
            course.band, baseline.band
        )));
    }
    let mean = baseline.mean().ok_or_else(|| Error::InvalidParameter("empty baseline".into()))?;
    if !(mean > T::zero()) {
        return Err(Error::ZeroBaseline(mean.to_f64_lossy()));
    }
    Ok(PowerCourse {
        values: course.values.iter().map(|&v| v / mean).collect(),
        frame_times_s: course.frame_times_s.clone(),
        band: course.band,
        normalized: true,
    })
}

/// Frame-wise theta / alpha.
pub fn theta_alpha_ratio<T: Real>(theta: &PowerCourse<T>, alpha: &PowerCourse<T>) -> Result<Vec<T>> {
    if theta.len() != alpha.len() {
        return Err(Error::LengthMismatch { left: theta.len(), right: alpha.len() });
    }
    if theta.frame_times_s.iter().zip(&alpha.frame_times_s).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::InvalidParameter("theta and alpha frame times differ".into()));
    }
    theta
        .values
        .iter()
        .zip(&alpha.values)
        .enumerate()
        .map(|(frame, (&t, &a))| if a == T::zero() { Err(Error::ZeroAlphaFrame { frame }) } else { Ok(t / a) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlinkParams {
    pub threshold_uv: f64,
    pub refractory_s: f64,
}

impl Default for BlinkParams {
    fn default() -> Self {
        Self { threshold_uv: defaults::BLINK_THRESHOLD_UV, refractory_s: defaults::BLINK_REFRACTORY_S }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlinkReport {
    pub count: usize,
    pub per_minute: f64,
    pub blink_times_s: Vec<f64>,
    pub duration_s: f64,
}

/// Upward crossings of the rectified Fp1/Fp2 mean through the threshold.
/// Crossings within the refractory period of the last counted blink merge into it.
/// The signal is taken to be below threshold before the first sample.
pub fn count_blinks<T: Real>(series: &TimeSeries<T>, params: &BlinkParams) -> Result<BlinkReport> {
    let [a, b] = defaults::BLINK_CHANNELS.map(|l| series.channel(l).ok_or_else(|| Error::MissingChannel(l.to_string())));
    let (a, b) = (a?, b?);
    let threshold = T::lit(params.threshold_uv);
    let half = T::lit(0.5);
    let mut times: Vec<f64> = Vec::new();
    let mut above = false;
    for k in 0..series.n_samples() {
        let level = (a[k].abs() + b[k].abs()) * half;
        let now_above = level >= threshold;
        if now_above && !above {
            let t = series.time_of(k);
            if times.last().is_none_or(|&last| t - last >= params.refractory_s) {
                times.push(t);
            }
        }
        above = now_above;
    }
    let duration_s = series.duration_s();
    let per_minute = if duration_s > 0.0 { times.len() as f64 / (duration_s / 60.0) } else { 0.0 };
    Ok(BlinkReport { count: times.len(), per_minute, blink_times_s: times, duration_s })
}
