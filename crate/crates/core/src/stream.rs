//! Incremental windowed inference and the adaptive difficulty controller.
//!
//! Windows are anchored at the first pushed sample: window `w` covers samples
//! `[w·hop, w·hop + len)`. A window is decided as soon as its last sample
//! arrives, so the decision list never depends on how the input was split
//! into `push` calls.

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::learn::LinearModel;
use crate::signal::{Channel, TimeSeries, WindowPlan};
use crate::spectral::{band_power, stft_power_samples, BandSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "id")]
pub enum Pipeline {
    /// Band power of each listed electrode over the raw window, averaged.
    IafCourse { band: BandSpec, electrodes: Vec<String> },
    /// Mean of the valid (non-NaN) pupil samples in the window.
    PupilWindow,
    /// Mean target-to-gaze distance over the valid samples in the window.
    PursuitDeviation,
}

impl Pipeline {
    pub fn id(&self) -> &'static str {
        match self {
            Self::IafCourse { .. } => "iaf-course",
            Self::PupilWindow => "pupil-window",
            Self::PursuitDeviation => "pursuit-deviation",
        }
    }

    /// Indices of the channels this pipeline reads.
    fn channel_indices(&self, channels: &[Channel]) -> Result<Vec<usize>> {
        let find = |label: &str| {
            channels.iter().position(|c| c.label == label).ok_or_else(|| Error::ChannelMismatch(format!("missing channel `{label}`")))
        };
        match self {
            Self::IafCourse { electrodes, .. } => electrodes.iter().map(|e| find(e)).collect(),
            Self::PupilWindow => {
                if channels.len() == 1 {
                    Ok(vec![0])
                } else {
                    find("pupil").map(|i| vec![i])
                }
            }
            Self::PursuitDeviation => crate::io::PURSUIT_CHANNELS.iter().map(|l| find(l)).collect(),
        }
    }

    /// Feature vector of one window; `rows` are the selected channels.
    pub fn features(&self, rows: &[&[f64]], rate_hz: f64, window: usize) -> Result<Vec<f64>> {
        match self {
            Self::IafCourse { band, .. } => {
                let len = rows[0].len();
                let plan = WindowPlan { window_s: len as f64 / rate_hz, hop_s: len as f64 / rate_hz, window_len: len, hop_len: len, frame_count: 1 };
                let mut total = 0.0;
                for row in rows {
                    total += band_power(&stft_power_samples(row, rate_hz, &plan)?, band)?[0];
                }
                Ok(vec![total / rows.len() as f64])
            }
            Self::PupilWindow => {
                let valid: Vec<f64> = rows[0].iter().copied().filter(|v| !v.is_nan()).collect();
                crate::num::mean(&valid).map(|m| vec![m]).ok_or(Error::NoValidSamples { window })
            }
            Self::PursuitDeviation => {
                let (mut sum, mut count) = (0.0, 0usize);
                for k in 0..rows[0].len() {
                    let d = (rows[0][k] - rows[2][k]).hypot(rows[1][k] - rows[3][k]);
                    if !d.is_nan() {
                        sum += d;
                        count += 1;
                    }
                }
                if count == 0 {
                    return Err(Error::NoValidSamples { window });
                }
                Ok(vec![sum / count as f64])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    pub window_s: f64,
    pub hop_s: f64,
}

impl WindowPolicy {
    pub fn pupil() -> Self {
        Self { window_s: defaults::PUPIL_WINDOW_S, hop_s: defaults::PUPIL_WINDOW_S }
    }

    pub fn eeg() -> Self {
        Self { window_s: defaults::WINDOW_S, hop_s: defaults::HOP_S }
    }

    fn lengths(&self, rate_hz: f64) -> Result<(usize, usize)> {
        let len = (self.window_s * rate_hz).round() as usize;
        let hop = (self.hop_s * rate_hz).round() as usize;
        if len == 0 {
            return Err(Error::ZeroLengthWindow { seconds: self.window_s });
        }
        if hop == 0 {
            return Err(Error::ZeroLengthWindow { seconds: self.hop_s });
        }
        Ok((len, hop))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub window: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Difficult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Workload {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyCommand {
    /// When the triggering decision became available (its window end).
    pub at_time_s: f64,
    /// First task boundary at or after `at_time_s`.
    pub effective_at_s: f64,
    pub new_difficulty: Difficulty,
    pub triggering_label: Workload,
}

/// High workload asks for easy tasks, low workload for difficult ones. A
/// command is only emitted when it changes the target difficulty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyController {
    /// Class label the model uses for high workload.
    pub high_class: usize,
    /// Difficulty the next task will have.
    pub target: Difficulty,
    /// Tasks start every `task_period_s` seconds from zero.
    pub task_period_s: f64,
    pub commands: Vec<DifficultyCommand>,
}

impl DifficultyController {
    pub fn new(high_class: usize, initial: Difficulty, task_period_s: f64) -> Self {
        Self { high_class, target: initial, task_period_s, commands: vec![] }
    }

    pub fn next_task_boundary(&self, t: f64) -> f64 {
        if self.task_period_s > 0.0 {
            (t / self.task_period_s).ceil() * self.task_period_s
        } else {
            t
        }
    }

    pub fn adapt(&mut self, decision: &Decision) -> Option<DifficultyCommand> {
        let workload = if decision.label == self.high_class { Workload::High } else { Workload::Low };
        let wanted = match workload {
            Workload::High => Difficulty::Easy,
            Workload::Low => Difficulty::Difficult,
        };
        if wanted == self.target {
            return None;
        }
        self.target = wanted;
        let cmd = DifficultyCommand {
            at_time_s: decision.end_s,
            effective_at_s: self.next_task_boundary(decision.end_s),
            new_difficulty: wanted,
            triggering_label: workload,
        };
        self.commands.push(cmd);
        Some(cmd)
    }

    pub fn switch_count(&self) -> usize {
        self.commands.len()
    }
}

/// One owner pushes samples in; decisions accumulate in order.
#[derive(Debug, Clone)]
pub struct StreamSession {
    pipeline: Pipeline,
    policy: WindowPolicy,
    model: LinearModel,
    rate_hz: f64,
    t0_s: f64,
    channels: Vec<Channel>,
    selected: Vec<usize>,
    window_len: usize,
    hop_len: usize,
    capacity: usize,
    /// Absolute index of `buffer[_][0]`.
    buffer_start: usize,
    buffer: Vec<Vec<f64>>,
    next_window: usize,
    received: usize,
    pushes: usize,
    decisions: Vec<Decision>,
    controller: Option<DifficultyController>,
}

impl StreamSession {
    pub fn new(
        pipeline: Pipeline,
        policy: WindowPolicy,
        model: LinearModel,
        rate_hz: f64,
        channels: Vec<Channel>,
        t0_s: f64,
    ) -> Result<Self> {
        Self::with_capacity_s(pipeline, policy, model, rate_hz, channels, t0_s, defaults::STREAM_BUFFER_S)
    }

    pub fn with_capacity_s(
        pipeline: Pipeline,
        policy: WindowPolicy,
        model: LinearModel,
        rate_hz: f64,
        channels: Vec<Channel>,
        t0_s: f64,
        capacity_s: f64,
    ) -> Result<Self> {
        if !(rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("rate {rate_hz} must be positive")));
        }
        let (window_len, hop_len) = policy.lengths(rate_hz)?;
        let capacity = (capacity_s * rate_hz).round() as usize;
        if capacity < window_len {
            return Err(Error::InvalidParameter(format!("buffer of {capacity} samples cannot hold a {window_len}-sample window")));
        }
        let selected = pipeline.channel_indices(&channels)?;
        let n_ch = channels.len();
        Ok(Self {
            pipeline,
            policy,
            model,
            rate_hz,
            t0_s,
            channels,
            selected,
            window_len,
            hop_len,
            capacity,
            buffer_start: 0,
            buffer: vec![vec![]; n_ch],
            next_window: 0,
            received: 0,
            pushes: 0,
            decisions: vec![],
            controller: None,
        })
    }

    pub fn with_controller(mut self, controller: DifficultyController) -> Self {
        self.controller = Some(controller);
        self
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn controller(&self) -> Option<&DifficultyController> {
        self.controller.as_ref()
    }

    pub fn buffered(&self) -> usize {
        self.buffer.first().map_or(0, Vec::len)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Append a block (channels × samples) and return the decisions it completes.
    /// On error the session is unchanged.
    pub fn push(&mut self, block: &[Vec<f64>]) -> Result<Vec<Decision>> {
        if block.len() != self.channels.len() {
            return Err(Error::ChannelMismatch(format!("expected {} channels, got {}", self.channels.len(), block.len())));
        }
        let n = block.first().map_or(0, Vec::len);
        if let Some(row) = block.iter().find(|r| r.len() != n) {
            return Err(Error::ChannelMismatch(format!("ragged block: rows of {n} and {} samples", row.len())));
        }
        if self.buffered() + n > self.capacity {
            return Err(Error::BufferOverflow { capacity: self.capacity });
        }
        // compute first, so a failing window leaves the session untouched
        let mut buffer = self.buffer.clone();
        buffer.iter_mut().zip(block).for_each(|(b, r)| b.extend_from_slice(r));
        let end = self.received + n;
        let mut out = vec![];
        let mut w = self.next_window;
        while w * self.hop_len + self.window_len <= end {
            let start = w * self.hop_len - self.buffer_start;
            let rows: Vec<&[f64]> = self.selected.iter().map(|&c| &buffer[c][start..start + self.window_len]).collect();
            out.push(self.decide(w, &rows)?);
            w += 1;
        }
        let keep_from = (w * self.hop_len).min(end);
        let drop = keep_from.saturating_sub(self.buffer_start);
        buffer.iter_mut().for_each(|b| {
            b.drain(..drop.min(b.len()));
        });
        self.buffer = buffer;
        self.buffer_start += drop;
        self.next_window = w;
        self.received = end;
        self.pushes += 1;
        for d in &out {
            if let Some(c) = self.controller.as_mut() {
                c.adapt(d);
            }
        }
        self.decisions.extend(out.iter().cloned());
        Ok(out)
    }

    fn decide(&self, w: usize, rows: &[&[f64]]) -> Result<Decision> {
        let features = self.pipeline.features(rows, self.rate_hz, w)?;
        let label = self.model.predict_class(&features)?;
        let start = w * self.hop_len;
        Ok(Decision {
            window: w,
            start_s: self.t0_s + start as f64 / self.rate_hz,
            end_s: self.t0_s + (start + self.window_len) as f64 / self.rate_hz,
            features,
            label,
        })
    }

    pub fn report(&self) -> SessionReport {
        SessionReport {
            pipeline: self.pipeline.clone(),
            policy: self.policy,
            rate_hz: self.rate_hz,
            t0_s: self.t0_s,
            channels: self.channels.clone(),
            window_len: self.window_len,
            hop_len: self.hop_len,
            capacity: self.capacity,
            samples_received: self.received,
            pushes: self.pushes,
            duration_s: self.received as f64 / self.rate_hz,
            model: self.model.clone(),
            decisions: self.decisions.clone(),
            commands: self.controller.as_ref().map(|c| c.commands.clone()).unwrap_or_default(),
            switch_count: self.controller.as_ref().map_or(0, DifficultyController::switch_count),
        }
    }
}

/// Everything needed to re-derive the decisions offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub pipeline: Pipeline,
    pub policy: WindowPolicy,
    pub rate_hz: f64,
    pub t0_s: f64,
    pub channels: Vec<Channel>,
    pub window_len: usize,
    pub hop_len: usize,
    pub capacity: usize,
    pub samples_received: usize,
    pub pushes: usize,
    pub duration_s: f64,
    pub model: LinearModel,
    pub decisions: Vec<Decision>,
    pub commands: Vec<DifficultyCommand>,
    /// Number of difficulty changes over the run.
    pub switch_count: usize,
}

impl SessionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Labels recomputed from the stored window features.
    pub fn replay(&self) -> Result<Vec<usize>> {
        self.decisions.iter().map(|d| self.model.predict_class(&d.features)).collect()
    }
}

pub fn session_report(session: &StreamSession) -> SessionReport {
    session.report()
}

/// Decisions for a whole recording, computed without a session buffer.
pub fn batch_decisions(pipeline: &Pipeline, policy: &WindowPolicy, model: &LinearModel, series: &TimeSeries<f64>) -> Result<Vec<Decision>> {
    let (len, hop) = policy.lengths(series.rate_hz())?;
    let selected = pipeline.channel_indices(series.channels())?;
    let plan = WindowPlan::new(series.n_samples(), series.rate_hz(), len as f64 / series.rate_hz(), hop as f64 / series.rate_hz())?;
    (0..plan.frame_count)
        .map(|w| {
            let r = plan.frame_range(w);
            let rows: Vec<&[f64]> = selected.iter().map(|&c| &series.data()[c][r.clone()]).collect();
            let features = pipeline.features(&rows, series.rate_hz(), w)?;
            Ok(Decision {
                window: w,
                start_s: series.t0_s() + r.start as f64 / series.rate_hz(),
                end_s: series.t0_s() + r.end as f64 / series.rate_hz(),
                label: model.predict_class(&features)?,
                features,
            })
        })
        .collect()
}

/// Feed a recording through a session in blocks of the given sizes (the
/// remainder goes in a final block).
pub fn replay_series(session: &mut StreamSession, series: &TimeSeries<f64>, block_sizes: &[usize]) -> Result<()> {
    let n = series.n_samples();
    let mut at = 0;
    let mut sizes = block_sizes.iter().copied().filter(|&s| s > 0);
    while at < n {
        let size = sizes.next().unwrap_or(n - at).min(n - at);
        let block: Vec<Vec<f64>> = series.data().iter().map(|r| r[at..at + size].to_vec()).collect();
        session.push(&block)?;
        at += size;
    }
    Ok(())
}
