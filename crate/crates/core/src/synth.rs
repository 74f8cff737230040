//! Seeded synthetic recordings and the N-back schedule engine.
//!
//! Every generator draws from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Independent draws use separate ChaCha streams via
//! `set_stream`: component `j` phases use stream `PHASE_STREAM | j`, channel
//! (or axis) `c` noise uses stream `NOISE_STREAM | c`. Gaussian draws use
//! `rand_distr::Normal`.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::gaze::{gen_trajectory, Condition, GazeTrace, Geometry, PursuitSpeed, PursuitTrial, Screen, TrajectoryPath, TrajectoryShape};
use crate::signal::{Channel, TimeSeries};

pub const PHASE_STREAM: u64 = 1 << 32;
pub const NOISE_STREAM: u64 = 2 << 32;
pub const SCHEDULE_STREAM: u64 = 3 << 32;
pub const TRIAL_STREAM: u64 = 5 << 32;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

// ── N-back ─────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBackSchedule {
    pub n: usize,
    pub stimuli: Vec<u8>,
    pub is_match: Vec<bool>,
    pub display_s: f64,
    pub blank_s: f64,
    pub onset_times_s: Vec<f64>,
}

/// Match rule: 0-back matches every stimulus; otherwise position `i >= n`
/// matches when it repeats the digit `n` places back.
pub fn match_rule(n: usize, stimuli: &[u8]) -> Vec<bool> {
    (0..stimuli.len()).map(|i| n == 0 || (i >= n && stimuli[i] == stimuli[i - n])).collect()
}

impl NBackSchedule {
    pub fn from_stimuli(n: usize, stimuli: Vec<u8>) -> Self {
        let (display_s, blank_s) = (defaults::NBACK_DISPLAY_S, defaults::NBACK_BLANK_S);
        let is_match = match_rule(n, &stimuli);
        let onset_times_s = (0..stimuli.len()).map(|i| i as f64 * (display_s + blank_s)).collect();
        Self { n, stimuli, is_match, display_s, blank_s, onset_times_s }
    }

    pub fn len(&self) -> usize {
        self.stimuli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stimuli.is_empty()
    }

    /// Total trial duration: every stimulus plus its blank.
    pub fn span_s(&self) -> f64 {
        self.len() as f64 * (self.display_s + self.blank_s)
    }

    pub fn match_count(&self) -> usize {
        self.is_match.iter().filter(|&&m| m).count()
    }
}

/// Decide which eligible positions match (exactly `round(rate * eligible)` of
/// them, chosen at random), then fill digits consistently.
pub fn gen_nback_schedule(n: usize, length: usize, target_match_rate: f64, seed: u64) -> Result<NBackSchedule> {
    if length == 0 {
        return Err(Error::InvalidParameter("schedule length must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&target_match_rate) {
        return Err(Error::InvalidParameter(format!("match rate {target_match_rate} outside [0, 1]")));
    }
    if n >= length && target_match_rate > 0.0 && n > 0 {
        return Err(Error::InfeasibleRate { n, length, rate: target_match_rate });
    }
    let mut r = rng(seed, SCHEDULE_STREAM);
    let mut stimuli: Vec<u8> = Vec::with_capacity(length);
    if n == 0 {
        stimuli.extend((0..length).map(|_| r.random_range(0..10u8)));
        return Ok(NBackSchedule::from_stimuli(n, stimuli));
    }
    let eligible = length.saturating_sub(n);
    let matches = (target_match_rate * eligible as f64).round() as usize;
    let mut decide: Vec<bool> = (0..eligible).map(|i| i < matches).collect();
    decide.shuffle(&mut r);
    for i in 0..length {
        let digit = if i < n {
            r.random_range(0..10u8)
        } else if decide[i - n] {
            stimuli[i - n]
        } else {
            let back = stimuli[i - n];
            // uniform over the nine other digits
            let d = r.random_range(0..9u8);
            if d >= back {
                d + 1
            } else {
                d
            }
        };
        stimuli.push(digit);
    }
    Ok(NBackSchedule::from_stimuli(n, stimuli))
}

// ── envelopes ──────────────────────────────────────────

/// Time-varying gain, usually in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Envelope {
    #[default]
    Constant,
    /// `before` until `at_s`, `after` from then on.
    Step { at_s: f64, before: f64, after: f64 },
    /// 1 inside `[start_s, end_s)`, 0 elsewhere.
    Window { start_s: f64, end_s: f64 },
    /// Linear from `from` at `start_s` to `to` at `end_s`, held outside.
    Ramp { start_s: f64, end_s: f64, from: f64, to: f64 },
    /// `0.5 + 0.5 sin(2π f t)`.
    Sine { freq_hz: f64 },
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Self::Constant => 1.0,
            Self::Step { at_s, before, after } => {
                if t < at_s {
                    before
                } else {
                    after
                }
            }
            Self::Window { start_s, end_s } => f64::from(u8::from(t >= start_s && t < end_s)),
            Self::Ramp { start_s, end_s, from, to } => {
                let u = ((t - start_s) / (end_s - start_s)).clamp(0.0, 1.0);
                from + u * (to - from)
            }
            Self::Sine { freq_hz } => 0.5 + 0.5 * (std::f64::consts::TAU * freq_hz * t).sin(),
        }
    }
}

// ── specs ──────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub freq_hz: f64,
    pub amplitude: f64,
    /// One weight per channel.
    pub mixing: Vec<f64>,
    #[serde(default)]
    pub envelope: Envelope,
    /// Fixed phase; drawn from the component's stream when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_rad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EegSynth {
    pub duration_s: f64,
    pub rate_hz: f64,
    pub seed: u64,
    pub channels: Vec<String>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PupilSynth {
    pub duration_s: f64,
    pub rate_hz: f64,
    pub seed: u64,
    pub base_mm: f64,
    pub gain_mm: f64,
    pub noise_sigma_mm: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeSynth {
    pub seed: u64,
    pub noise_sigma_px: f64,
    pub lag_ms: f64,
    pub geometry: crate::gaze::Geometry,
    pub speed_px_s: f64,
    pub duration_s: f64,
    pub rate_hz: f64,
}

/// Generator parameters; seed fully determines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SynthSpec {
    Eeg(EegSynth),
    Gaze(GazeSynth),
    Pupil(PupilSynth),
}

impl SynthSpec {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Phase of component `j` when none is fixed.
pub fn component_phase(seed: u64, j: usize) -> f64 {
    rng(seed, PHASE_STREAM | j as u64).random_range(0.0..std::f64::consts::TAU)
}

pub fn gen_eeg(spec: &EegSynth) -> Result<TimeSeries<f64>> {
    let nyquist_hz = spec.rate_hz / 2.0;
    let c = spec.channels.len();
    for comp in &spec.components {
        if comp.freq_hz >= nyquist_hz {
            return Err(Error::NyquistViolation { freq_hz: comp.freq_hz, nyquist_hz });
        }
        if comp.mixing.len() != c {
            return Err(Error::DimensionMismatch { expected: c, got: comp.mixing.len() });
        }
    }
    let n = (spec.duration_s * spec.rate_hz).round() as usize;
    let times: Vec<f64> = (0..n).map(|k| k as f64 / spec.rate_hz).collect();
    let mut data = vec![vec![0.0; n]; c];
    for (j, comp) in spec.components.iter().enumerate() {
        let phase = comp.phase_rad.unwrap_or_else(|| component_phase(spec.seed, j));
        let w = std::f64::consts::TAU * comp.freq_hz;
        let wave: Vec<f64> = times.iter().map(|&t| comp.amplitude * comp.envelope.at(t) * (w * t + phase).sin()).collect();
        for (row, &m) in data.iter_mut().zip(&comp.mixing) {
            if m != 0.0 {
                row.iter_mut().zip(&wave).for_each(|(x, v)| *x += m * v);
            }
        }
    }
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for (ch, row) in data.iter_mut().enumerate() {
            let mut r = rng(spec.seed, NOISE_STREAM | ch as u64);
            row.iter_mut().for_each(|x| *x += normal.sample(&mut r));
        }
    }
    let channels = spec.channels.iter().map(|l| Channel::new(l.clone(), "uV")).collect();
    TimeSeries::new(spec.rate_hz, channels, data, 0.0)
}

pub fn gen_pupil(spec: &PupilSynth) -> Result<TimeSeries<f64>> {
    if !(spec.base_mm > 0.0 && spec.gain_mm >= 0.0) {
        return Err(Error::InvalidParameter("pupil base must be positive and gain non-negative".into()));
    }
    let n = (spec.duration_s * spec.rate_hz).round() as usize;
    let normal = Normal::new(0.0, spec.noise_sigma_mm.max(0.0)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut r = rng(spec.seed, NOISE_STREAM);
    let x = (0..n)
        .map(|k| {
            let t = k as f64 / spec.rate_hz;
            let noise = if spec.noise_sigma_mm > 0.0 { normal.sample(&mut r) } else { 0.0 };
            spec.base_mm + spec.gain_mm * spec.envelope.at(t) + noise
        })
        .collect();
    TimeSeries::from_samples(spec.rate_hz, "pupil", "mm", x)
}

/// Gaze that follows `path` delayed by `lag_ms` plus isotropic Gaussian noise.
pub fn gen_gaze(path: &TrajectoryPath<f64>, noise_sigma_px: f64, lag_ms: f64, seed: u64) -> Result<GazeTrace<f64>> {
    if lag_ms < 0.0 {
        return Err(Error::InvalidParameter(format!("negative lag {lag_ms} ms")));
    }
    let lag_samples = lag_ms / 1000.0 * path.rate_hz;
    let n = path.len();
    let lagged = |k: usize, axis: usize| -> f64 {
        let pos = (k as f64 - lag_samples).max(0.0);
        let i = pos.floor() as usize;
        if i + 1 >= n {
            return path.points[n - 1][axis];
        }
        let frac = pos - i as f64;
        path.points[i][axis] * (1.0 - frac) + path.points[i + 1][axis] * frac
    };
    let normal = Normal::new(0.0, noise_sigma_px.max(0.0)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rx = rng(seed, NOISE_STREAM);
    let mut ry = rng(seed, NOISE_STREAM | 1);
    let points = (0..n)
        .map(|k| {
            let (nx, ny) = if noise_sigma_px > 0.0 { (normal.sample(&mut rx), normal.sample(&mut ry)) } else { (0.0, 0.0) };
            [lagged(k, 0) + nx, lagged(k, 1) + ny]
        })
        .collect();
    Ok(GazeTrace { rate_hz: path.rate_hz, times_s: path.times_s.clone(), points, validity: vec![true; n] })
}

pub fn synthesize(spec: &SynthSpec) -> Result<TimeSeries<f64>> {
    match spec {
        SynthSpec::Eeg(s) => gen_eeg(s),
        SynthSpec::Pupil(s) => gen_pupil(s),
        SynthSpec::Gaze(s) => {
            let path = crate::gaze::gen_trajectory(&s.geometry, s.speed_px_s, s.duration_s, s.rate_hz, &Default::default())?;
            let gaze = gen_gaze(&path, s.noise_sigma_px, s.lag_ms, s.seed)?;
            crate::io::gaze_to_series(&path, &gaze)
        }
    }
}

// ── fixtures ───────────────────────────────────────────

/// Eyes-open/eyes-closed single-channel pair: both carry white noise, the
/// closed recording adds an alpha sinusoid.
pub fn eyes_pair(
    seed: u64,
    alpha_hz: f64,
    alpha_amplitude: f64,
    noise_sigma: f64,
    duration_s: f64,
    rate_hz: f64,
) -> Result<(TimeSeries<f64>, TimeSeries<f64>)> {
    let base = EegSynth {
        duration_s,
        rate_hz,
        seed,
        channels: vec!["Oz".into()],
        noise_sigma,
        components: vec![],
    };
    let open = gen_eeg(&base)?;
    let closed = gen_eeg(&EegSynth {
        seed: seed.wrapping_add(0x9e37_79b9),
        components: vec![Component {
            freq_hz: alpha_hz,
            amplitude: alpha_amplitude,
            mixing: vec![1.0],
            envelope: Envelope::Constant,
            phase_rad: None,
        }],
        ..base
    })?;
    Ok((open, closed))
}

/// Pursuit trials for every (person, shape, speed, repetition, label); the
/// gaze noise of a trial is `label_sigmas_px[label]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitFixture {
    pub seed: u64,
    pub persons: u32,
    pub repetitions: u32,
    pub shapes: Vec<TrajectoryShape>,
    pub speeds: Vec<PursuitSpeed>,
    pub label_sigmas_px: Vec<f64>,
    #[serde(default)]
    pub lag_ms: f64,
    pub duration_s: f64,
    pub rate_hz: f64,
}

impl Default for PursuitFixture {
    fn default() -> Self {
        Self {
            seed: 1,
            persons: 4,
            repetitions: 2,
            shapes: vec![TrajectoryShape::Circle],
            speeds: vec![PursuitSpeed::Slow],
            label_sigmas_px: vec![2.0, 15.0],
            lag_ms: 0.0,
            duration_s: 28.0,
            rate_hz: defaults::GAZE_RATE_HZ,
        }
    }
}

/// Seed of trial number `index` within a fixture.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    rng(seed, TRIAL_STREAM | index).next_u64()
}

pub fn gen_pursuit_trials(f: &PursuitFixture) -> Result<Vec<PursuitTrial<f64>>> {
    let screen = Screen::default();
    let mut out = vec![];
    let mut index = 0u64;
    for &shape in &f.shapes {
        let geometry = Geometry::default_for(shape, &screen);
        for &speed in &f.speeds {
            let path = gen_trajectory::<f64>(&geometry, speed.px_per_s(), f.duration_s, f.rate_hz, &screen)?;
            for person_id in 0..f.persons {
                for repetition_id in 0..f.repetitions {
                    for (label, &sigma) in f.label_sigmas_px.iter().enumerate() {
                        let gaze = gen_gaze(&path, sigma, f.lag_ms, trial_seed(f.seed, index))?;
                        index += 1;
                        out.push(PursuitTrial {
                            path: path.clone(),
                            gaze,
                            label,
                            person_id,
                            condition: Condition { shape, speed, nback: u8::try_from(label).ok() },
                            repetition_id,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}
