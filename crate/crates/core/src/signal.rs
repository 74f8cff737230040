//! Uniformly sampled multichannel series, window arithmetic and annotations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub label: String,
    /// Free-form unit string (`uV`, `mm`, `px`, ...). Carried, not enforced.
    pub unit: String,
}

impl Channel {
    pub fn new(label: impl Into<String>, unit: impl Into<String>) -> Self {
        Self { label: label.into(), unit: unit.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub time_s: f64,
    pub tag: String,
}

impl Annotation {
    pub fn new(time_s: f64, tag: impl Into<String>) -> Self {
        Self { time_s, tag: tag.into() }
    }
}

/// Channels × samples matrix at a fixed rate. Sample `k` sits at `t0_s + k / rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    rate_hz: f64,
    channels: Vec<Channel>,
    data: Vec<Vec<T>>,
    t0_s: f64,
    annotations: Vec<Annotation>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(rate_hz: f64, channels: Vec<Channel>, data: Vec<Vec<T>>, t0_s: f64) -> Result<Self> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("rate_hz must be positive, got {rate_hz}")));
        }
        if channels.len() != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} channel labels for {} data rows",
                channels.len(),
                data.len()
            )));
        }
        if let Some(first) = data.first() {
            if let Some(bad) = data.iter().position(|row| row.len() != first.len()) {
                return Err(Error::ShapeMismatch(format!(
                    "row {bad} has {} samples, row 0 has {}",
                    data[bad].len(),
                    first.len()
                )));
            }
        }
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].iter().any(|o| o.label == c.label) {
                return Err(Error::DuplicateChannel(c.label.clone()));
            }
        }
        Ok(Self { rate_hz, channels, data, t0_s, annotations: Vec::new() })
    }

    /// Single-channel convenience constructor.
    pub fn from_samples(rate_hz: f64, label: &str, unit: &str, samples: Vec<T>) -> Result<Self> {
        Self::new(rate_hz, vec![Channel::new(label, unit)], vec![samples], 0.0)
    }

    /// Attach annotations. They are sorted; any outside the recorded span is rejected.
    pub fn with_annotations(mut self, mut annotations: Vec<Annotation>) -> Result<Self> {
        let (start, end) = (self.t0_s, self.end_s());
        if let Some(a) = annotations.iter().find(|a| !(a.time_s >= start && a.time_s <= end)) {
            return Err(Error::InvalidParameter(format!(
                "annotation `{}` at {} s outside [{start}, {end}]",
                a.tag, a.time_s
            )));
        }
        annotations.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        self.annotations = annotations;
        Ok(self)
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn t0_s(&self) -> f64 {
        self.t0_s
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|c| c.label.as_str())
    }

    pub fn data(&self) -> &[Vec<T>] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Vec<T>> {
        self.data
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.rate_hz
    }

    pub fn end_s(&self) -> f64 {
        self.t0_s + self.duration_s()
    }

    pub fn time_of(&self, sample: usize) -> f64 {
        self.t0_s + sample as f64 / self.rate_hz
    }

    /// Nearest sample index for an absolute time.
    pub fn sample_at(&self, time_s: f64) -> usize {
        ((time_s - self.t0_s) * self.rate_hz).round().max(0.0) as usize
    }

    pub fn channel(&self, label: &str) -> Option<&[T]> {
        self.channels.iter().position(|c| c.label == label).map(|i| self.data[i].as_slice())
    }

    /// Single-channel view; errors unless exactly one channel is present.
    pub fn single(&self) -> Result<&[T]> {
        match self.data.as_slice() {
            [row] => Ok(row),
            rows => Err(Error::ShapeMismatch(format!("expected 1 channel, got {}", rows.len()))),
        }
    }

    /// Keep samples `[start, end)`; annotations outside the new span are dropped.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        let n = self.n_samples();
        if start > end || end > n {
            return Err(Error::InvalidParameter(format!("slice {start}..{end} of {n} samples")));
        }
        let t0_s = self.time_of(start);
        let t1_s = self.time_of(end);
        let annotations = self
            .annotations
            .iter()
            .filter(|a| a.time_s >= t0_s && a.time_s <= t1_s)
            .cloned()
            .collect();
        Ok(Self {
            rate_hz: self.rate_hz,
            channels: self.channels.clone(),
            data: self.data.iter().map(|row| row[start..end].to_vec()).collect(),
            t0_s,
            annotations,
        })
    }

    /// Same metadata, new sample rows (must keep the channel count and length).
    pub fn map_rows<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[T]) -> Result<Vec<T>>,
    {
        let data = self.data.iter().map(|row| f(row)).collect::<Result<Vec<_>>>()?;
        let mut out = Self::new(self.rate_hz, self.channels.clone(), data, self.t0_s)?;
        if out.n_samples() != self.n_samples() {
            return Err(Error::ShapeMismatch("row mapping changed the sample count".into()));
        }
        out.annotations = self.annotations.clone();
        Ok(out)
    }
}

/// Frame layout of a sliding window over a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_s: f64,
    pub hop_s: f64,
    pub window_len: usize,
    pub hop_len: usize,
    pub frame_count: usize,
}

impl WindowPlan {
    /// Window and hop are rounded to the nearest whole sample.
    pub fn new(n_samples: usize, rate_hz: f64, window_s: f64, hop_s: f64) -> Result<Self> {
        if !(window_s > 0.0 && hop_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window ({window_s} s) and hop ({hop_s} s) must be positive"
            )));
        }
        let window_len = (window_s * rate_hz).round() as usize;
        if window_len == 0 {
            return Err(Error::ZeroLengthWindow { seconds: window_s });
        }
        let hop_len = (hop_s * rate_hz).round() as usize;
        if hop_len == 0 {
            return Err(Error::ZeroLengthWindow { seconds: hop_s });
        }
        let frame_count = if n_samples >= window_len { (n_samples - window_len) / hop_len + 1 } else { 0 };
        Ok(Self { window_s, hop_s, window_len, hop_len, frame_count })
    }

    pub fn frame_start(&self, frame: usize) -> usize {
        frame * self.hop_len
    }

    pub fn frame_range(&self, frame: usize) -> std::ops::Range<usize> {
        let s = self.frame_start(frame);
        s..s + self.window_len
    }

    /// Center time of a frame relative to the first sample.
    pub fn frame_center_offset_s(&self, frame: usize, rate_hz: f64) -> f64 {
        (self.frame_start(frame) as f64 + self.window_len as f64 / 2.0) / rate_hz
    }
}

pub fn make_window_plan<T: Real>(series: &TimeSeries<T>, window_s: f64, hop_s: f64) -> Result<WindowPlan> {
    WindowPlan::new(series.n_samples(), series.rate_hz(), window_s, hop_s)
}

/// Cut `edge_s` from both ends. Kept annotations retain their absolute times.
pub fn trim_edges<T: Real>(series: &TimeSeries<T>, edge_s: f64) -> Result<TimeSeries<T>> {
    if edge_s < 0.0 {
        return Err(Error::InvalidParameter(format!("negative edge {edge_s} s")));
    }
    let n = series.n_samples();
    let edge = (edge_s * series.rate_hz()).round() as usize;
    if 2 * edge >= n && edge > 0 {
        return Err(Error::TooShort { needed: 2 * edge + 1, got: n });
    }
    series.slice(edge, n - edge)
}

/// Element-wise mean across channels.
pub fn channel_mean<T: Real>(series: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    let c = series.n_channels();
    if c == 0 {
        return Err(Error::InvalidParameter("channel_mean of a series without channels".into()));
    }
    let n = series.n_samples();
    let inv = T::one() / T::from_len(c);
    let mut acc = vec![T::zero(); n];
    for row in series.data() {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a = *a + v;
        }
    }
    acc.iter_mut().for_each(|a| *a = *a * inv);
    let first_unit = &series.channels()[0].unit;
    let unit = if series.channels().iter().all(|ch| &ch.unit == first_unit) {
        first_unit.clone()
    } else {
        "mixed".to_string()
    };
    let mut out = TimeSeries::new(series.rate_hz(), vec![Channel::new("mean", unit)], vec![acc], series.t0_s())?;
    out.annotations = series.annotations().to_vec();
    Ok(out)
}

/// Channels in the requested order.
pub fn select_channels<T: Real, S: AsRef<str>>(series: &TimeSeries<T>, labels: &[S]) -> Result<TimeSeries<T>> {
    let mut channels = Vec::with_capacity(labels.len());
    let mut data = Vec::with_capacity(labels.len());
    for label in labels {
        let label = label.as_ref();
        let idx = series
            .channels()
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| Error::UnknownChannel(label.to_string()))?;
        channels.push(series.channels()[idx].clone());
        data.push(series.data()[idx].clone());
    }
    let mut out = TimeSeries::new(series.rate_hz(), channels, data, series.t0_s())?;
    out.annotations = series.annotations().to_vec();
    Ok(out)
}
