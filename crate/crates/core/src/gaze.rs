//! Smooth-pursuit stimuli, gaze deviation features and pupil window means.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::signal::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryShape {
    Rectangle,
    Circle,
    Sine,
}

impl TrajectoryShape {
    pub const ALL: [TrajectoryShape; 3] = [Self::Rectangle, Self::Circle, Self::Sine];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rectangle => "rectangle",
            Self::Circle => "circle",
            Self::Sine => "sine",
        }
    }
}

impl std::str::FromStr for TrajectoryShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangle" | "rect" => Ok(Self::Rectangle),
            "circle" => Ok(Self::Circle),
            "sine" => Ok(Self::Sine),
            other => Err(Error::InvalidParameter(format!("unknown trajectory shape `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PursuitSpeed {
    Slow,
    Fast,
}

impl PursuitSpeed {
    pub const ALL: [PursuitSpeed; 2] = [Self::Slow, Self::Fast];

    pub fn px_per_s(self) -> f64 {
        match self {
            Self::Slow => defaults::PURSUIT_SLOW_PX_S,
            Self::Fast => defaults::PURSUIT_FAST_PX_S,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Slow => "slow",
            Self::Fast => "fast",
        }
    }
}

impl std::str::FromStr for PursuitSpeed {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slow" => Ok(Self::Slow),
            "fast" => Ok(Self::Fast),
            other => Err(Error::InvalidParameter(format!("unknown speed `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Screen {
    pub width_px: f64,
    pub height_px: f64,
}

impl Default for Screen {
    fn default() -> Self {
        Self { width_px: 1920.0, height_px: 1080.0 }
    }
}

/// Shape dimensions in pixels. Every shape is centered on the screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Geometry {
    Rectangle { width_px: f64, height_px: f64 },
    Circle { radius_px: f64 },
    /// Out-and-back sweep along `y = A sin(2π periods x / width)`.
    Sine { width_px: f64, amplitude_px: f64, periods: f64 },
}

impl Geometry {
    /// Default dimensions for a screen: 800×400 rectangle, radius-200 circle,
    /// sine with amplitude a quarter of the screen height and three periods.
    pub fn default_for(shape: TrajectoryShape, screen: &Screen) -> Self {
        match shape {
            TrajectoryShape::Rectangle => Self::Rectangle { width_px: 800.0, height_px: 400.0 },
            TrajectoryShape::Circle => Self::Circle { radius_px: 200.0 },
            TrajectoryShape::Sine => Self::Sine {
                width_px: (screen.width_px * 0.625).round(),
                amplitude_px: 0.25 * screen.height_px,
                periods: 3.0,
            },
        }
    }

    pub fn shape(&self) -> TrajectoryShape {
        match self {
            Self::Rectangle { .. } => TrajectoryShape::Rectangle,
            Self::Circle { .. } => TrajectoryShape::Circle,
            Self::Sine { .. } => TrajectoryShape::Sine,
        }
    }

    fn half_extent(&self) -> (f64, f64) {
        match *self {
            Self::Rectangle { width_px, height_px } => (width_px / 2.0, height_px / 2.0),
            Self::Circle { radius_px } => (radius_px, radius_px),
            Self::Sine { width_px, amplitude_px, .. } => (width_px / 2.0, amplitude_px),
        }
    }
}

/// Constant-speed closed curve, parameterized by arc length.
enum Curve {
    Rectangle { w: f64, h: f64 },
    Circle { r: f64 },
    Sine { table_s: Vec<f64>, table_x: Vec<f64>, width: f64, amplitude: f64, k: f64 },
}

impl Curve {
    fn new(g: &Geometry) -> Self {
        match *g {
            Geometry::Rectangle { width_px, height_px } => Self::Rectangle { w: width_px, h: height_px },
            Geometry::Circle { radius_px } => Self::Circle { r: radius_px },
            Geometry::Sine { width_px, amplitude_px, periods } => {
                let k = TAU * periods / width_px;
                let steps = (4096.0 * periods.max(1.0)) as usize;
                let mut table_s = Vec::with_capacity(steps + 1);
                let mut table_x = Vec::with_capacity(steps + 1);
                let (mut s, mut px, mut py) = (0.0, 0.0, 0.0);
                for i in 0..=steps {
                    let x = width_px * i as f64 / steps as f64;
                    let y = amplitude_px * (k * x).sin();
                    if i > 0 {
                        s += (x - px).hypot(y - py);
                    }
                    table_s.push(s);
                    table_x.push(x);
                    px = x;
                    py = y;
                }
                Self::Sine { table_s, table_x, width: width_px, amplitude: amplitude_px, k }
            }
        }
    }

    fn length(&self) -> f64 {
        match self {
            Self::Rectangle { w, h } => 2.0 * (w + h),
            Self::Circle { r } => TAU * r,
            Self::Sine { table_s, .. } => 2.0 * table_s[table_s.len() - 1],
        }
    }

    /// Offset from the screen center at arc length `s` (wrapped to one cycle).
    fn at(&self, s: f64) -> (f64, f64) {
        let s = s.rem_euclid(self.length());
        match *self {
            Self::Rectangle { w, h } => {
                let (x0, y0) = (-w / 2.0, -h / 2.0);
                if s < w {
                    (x0 + s, y0)
                } else if s < w + h {
                    (x0 + w, y0 + (s - w))
                } else if s < 2.0 * w + h {
                    (x0 + w - (s - w - h), y0 + h)
                } else {
                    (x0, y0 + h - (s - 2.0 * w - h))
                }
            }
            Self::Circle { r } => {
                let a = s / r;
                (r * a.cos(), r * a.sin())
            }
            Self::Sine { ref table_s, ref table_x, width, amplitude, k } => {
                let half = table_s[table_s.len() - 1];
                let along = if s <= half { s } else { 2.0 * half - s };
                let i = table_s.partition_point(|&v| v < along).clamp(1, table_s.len() - 1);
                let (s0, s1) = (table_s[i - 1], table_s[i]);
                let frac = if s1 > s0 { (along - s0) / (s1 - s0) } else { 0.0 };
                let x = table_x[i - 1] + frac * (table_x[i] - table_x[i - 1]);
                (x - width / 2.0, amplitude * (k * x).sin())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPath<T> {
    pub geometry: Geometry,
    pub speed_px_s: f64,
    pub rate_hz: f64,
    pub screen: Screen,
    pub dot_diameter_px: f64,
    /// Duration of one closed cycle.
    pub cycle_s: f64,
    pub times_s: Vec<f64>,
    pub points: Vec<[T; 2]>,
}

impl<T: Real> TrajectoryPath<T> {
    pub fn shape(&self) -> TrajectoryShape {
        self.geometry.shape()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Samples from `start` onward.
    pub fn skip(&self, start: usize) -> Self {
        let start = start.min(self.len());
        Self { times_s: self.times_s[start..].to_vec(), points: self.points[start..].to_vec(), ..self.clone() }
    }
}

pub fn gen_trajectory<T: Real>(
    geometry: &Geometry,
    speed_px_s: f64,
    duration_s: f64,
    rate_hz: f64,
    screen: &Screen,
) -> Result<TrajectoryPath<T>> {
    if !(speed_px_s > 0.0 && duration_s >= 0.0 && rate_hz > 0.0) {
        return Err(Error::InvalidParameter("speed, duration and rate must be positive".into()));
    }
    let dot = defaults::DOT_DIAMETER_PX;
    let (hx, hy) = geometry.half_extent();
    if !(hx > 0.0 && hy >= 0.0) {
        return Err(Error::InvalidParameter(format!("degenerate geometry {geometry:?}")));
    }
    if 2.0 * hx + dot > screen.width_px || 2.0 * hy + dot > screen.height_px {
        return Err(Error::GeometryOverflow(format!(
            "{:?} needs {}×{} px on a {}×{} screen",
            geometry,
            2.0 * hx + dot,
            2.0 * hy + dot,
            screen.width_px,
            screen.height_px
        )));
    }
    let curve = Curve::new(geometry);
    let (cx, cy) = (screen.width_px / 2.0, screen.height_px / 2.0);
    let n = (duration_s * rate_hz).round() as usize;
    let times_s: Vec<f64> = (0..n).map(|k| k as f64 / rate_hz).collect();
    let points = times_s
        .iter()
        .map(|&t| {
            let (dx, dy) = curve.at(speed_px_s * t);
            [T::lit(cx + dx), T::lit(cy + dy)]
        })
        .collect();
    Ok(TrajectoryPath {
        geometry: *geometry,
        speed_px_s,
        rate_hz,
        screen: *screen,
        dot_diameter_px: dot,
        cycle_s: curve.length() / speed_px_s,
        times_s,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeTrace<T> {
    pub rate_hz: f64,
    pub times_s: Vec<f64>,
    pub points: Vec<[T; 2]>,
    pub validity: Vec<bool>,
}

impl<T: Real> GazeTrace<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn skip(&self, start: usize) -> Self {
        let start = start.min(self.len());
        Self {
            rate_hz: self.rate_hz,
            times_s: self.times_s[start..].to_vec(),
            points: self.points[start..].to_vec(),
            validity: self.validity[start..].to_vec(),
        }
    }
}

/// Per-sample Euclidean distance between stimulus and gaze.
pub fn deviation_points<T: Real>(path: &[[T; 2]], gaze: &[[T; 2]]) -> Result<Vec<T>> {
    if path.len() != gaze.len() {
        return Err(Error::LengthMismatch { left: path.len(), right: gaze.len() });
    }
    Ok(path.iter().zip(gaze).map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1])).collect())
}

pub fn pursuit_deviation<T: Real>(path: &TrajectoryPath<T>, gaze: &GazeTrace<T>) -> Result<Vec<T>> {
    if path.rate_hz != gaze.rate_hz {
        return Err(Error::RateMismatch(path.rate_hz, gaze.rate_hz));
    }
    deviation_points(&path.points, &gaze.points)
}

/// How raw deviations are scaled into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum Normalization {
    /// Divide by the trial's own maximum.
    #[default]
    PerTrialMax,
    /// Divide by an externally supplied maximum (a person's or the dataset's).
    Reference(f64),
}

/// Scale by the chosen maximum; a zero maximum yields all zeros.
pub fn normalize_deviation<T: Real>(devs: &[T], mode: Normalization) -> Result<Vec<T>> {
    if devs.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let max = match mode {
        Normalization::PerTrialMax => devs.iter().copied().fold(T::zero(), T::max),
        Normalization::Reference(r) => T::lit(r),
    };
    if max <= T::zero() {
        return Ok(vec![T::zero(); devs.len()]);
    }
    Ok(devs.iter().map(|&d| d / max).collect())
}

/// Mean over a sliding window: `out[i] = mean(x[i*hop .. i*hop + window])`.
pub fn smooth_running_mean<T: Real>(devs: &[T], window: usize, hop: usize) -> Result<Vec<T>> {
    if window == 0 || hop == 0 {
        return Err(Error::InvalidParameter("window and hop must be at least one sample".into()));
    }
    if devs.len() < window {
        return Err(Error::TooShort { needed: window, got: devs.len() });
    }
    let count = (devs.len() - window) / hop + 1;
    let w = T::from_len(window);
    let mut out = Vec::with_capacity(count);
    let mut sum: T = devs[..window].iter().copied().sum();
    out.push(sum / w);
    for i in 1..count {
        let start = i * hop;
        let prev = start - hop;
        if hop >= window {
            sum = devs[start..start + window].iter().copied().sum();
        } else {
            for k in 0..hop {
                sum = sum - devs[prev + k] + devs[prev + window + k];
            }
        }
        // refresh periodically so rounding cannot accumulate
        if i % window == 0 {
            sum = devs[start..start + window].iter().copied().sum();
        }
        out.push(sum / w);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub shape: TrajectoryShape,
    pub speed: PursuitSpeed,
    /// N-back level; `None` for the no-task baseline.
    pub nback: Option<u8>,
}

impl Condition {
    /// Trajectory key, e.g. `circle-fast`.
    pub fn trajectory_key(&self) -> String {
        format!("{}-{}", self.shape.as_str(), self.speed.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "samples")]
pub enum LengthAdjustment {
    Exact,
    Truncated(usize),
    Padded(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitInstance<T> {
    pub values: Vec<T>,
    pub label: usize,
    pub person_id: u32,
    pub condition: Condition,
    pub repetition_id: u32,
    pub adjustment: LengthAdjustment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PursuitTrial<T> {
    pub path: TrajectoryPath<T>,
    pub gaze: GazeTrace<T>,
    pub label: usize,
    pub person_id: u32,
    pub condition: Condition,
    pub repetition_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub drop_head_s: f64,
    pub smooth_window: usize,
    pub smooth_hop: usize,
    pub target_len: usize,
}

impl Default for InstanceParams {
    fn default() -> Self {
        Self {
            drop_head_s: defaults::PURSUIT_DROP_HEAD_S,
            smooth_window: defaults::PURSUIT_SMOOTH_WINDOW,
            smooth_hop: defaults::PURSUIT_SMOOTH_HOP,
            target_len: defaults::PURSUIT_INSTANCE_LEN,
        }
    }
}

/// Raw deviations after dropping the head of the trial.
pub fn trial_deviation<T: Real>(trial: &PursuitTrial<T>, params: &InstanceParams) -> Result<Vec<T>> {
    let head = (params.drop_head_s * trial.path.rate_hz).round() as usize;
    if head >= trial.path.len() || head >= trial.gaze.len() {
        return Err(Error::EmptyAfterTrim);
    }
    pursuit_deviation(&trial.path.skip(head), &trial.gaze.skip(head))
}

/// drop head → deviation → normalize → running mean → fix length.
pub fn build_pursuit_instance<T: Real>(
    trial: &PursuitTrial<T>,
    params: &InstanceParams,
    normalization: Normalization,
) -> Result<PursuitInstance<T>> {
    let raw = trial_deviation(trial, params)?;
    let norm = normalize_deviation(&raw, normalization)?;
    let mut values = smooth_running_mean(&norm, params.smooth_window, params.smooth_hop)?;
    let adjustment = match values.len().cmp(&params.target_len) {
        std::cmp::Ordering::Equal => LengthAdjustment::Exact,
        std::cmp::Ordering::Greater => {
            let cut = values.len() - params.target_len;
            values.truncate(params.target_len);
            LengthAdjustment::Truncated(cut)
        }
        std::cmp::Ordering::Less => {
            let add = params.target_len - values.len();
            let edge = *values.last().ok_or(Error::EmptyAfterTrim)?;
            values.resize(params.target_len, edge);
            LengthAdjustment::Padded(add)
        }
    };
    Ok(PursuitInstance {
        values,
        label: trial.label,
        person_id: trial.person_id,
        condition: trial.condition,
        repetition_id: trial.repetition_id,
        adjustment,
    })
}

/// Which maximum a dataset's deviations are divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationScope {
    PerTrial,
    /// Maximum over all of a person's trials.
    #[default]
    PerPerson,
    /// Maximum over the whole dataset.
    Global,
}

/// Instances for many trials, ordered by (person, condition, repetition).
pub fn build_pursuit_dataset<T: Real>(
    trials: &[PursuitTrial<T>],
    params: &InstanceParams,
    scope: NormalizationScope,
) -> Result<Vec<PursuitInstance<T>>> {
    let mut order: Vec<usize> = (0..trials.len()).collect();
    order.sort_by_key(|&i| (trials[i].person_id, trials[i].condition, trials[i].repetition_id, i));
    let maxima: Vec<f64> = trials
        .iter()
        .map(|t| Ok(trial_deviation(t, params)?.iter().copied().fold(T::zero(), T::max).to_f64_lossy()))
        .collect::<Result<_>>()?;
    let reference = |i: usize| -> Normalization {
        match scope {
            NormalizationScope::PerTrial => Normalization::PerTrialMax,
            NormalizationScope::PerPerson => Normalization::Reference(
                trials
                    .iter()
                    .zip(&maxima)
                    .filter(|(t, _)| t.person_id == trials[i].person_id)
                    .map(|(_, &m)| m)
                    .fold(0.0, f64::max),
            ),
            NormalizationScope::Global => Normalization::Reference(maxima.iter().copied().fold(0.0, f64::max)),
        }
    };
    order.into_iter().map(|i| build_pursuit_instance(&trials[i], params, reference(i))).collect()
}

/// Mean of each non-overlapping window of a single-channel diameter series.
/// NaN samples count as invalid and are excluded.
pub fn pupil_window_feature<T: Real>(diam: &TimeSeries<T>, window_s: f64) -> Result<Vec<T>> {
    let x = diam.single()?;
    let len = (window_s * diam.rate_hz()).round() as usize;
    if len == 0 {
        return Err(Error::ZeroLengthWindow { seconds: window_s });
    }
    if x.len() < len {
        return Err(Error::TooShort { needed: len, got: x.len() });
    }
    x.chunks_exact(len)
        .enumerate()
        .map(|(window, chunk)| {
            let valid: Vec<T> = chunk.iter().copied().filter(|v| !v.is_nan()).collect();
            crate::num::mean(&valid).ok_or(Error::NoValidSamples { window })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(g: Geometry, speed: f64, seconds: f64) -> TrajectoryPath<f64> {
        gen_trajectory(&g, speed, seconds, 250.0, &Screen::default()).unwrap()
    }

    fn mean_speed(p: &TrajectoryPath<f64>) -> f64 {
        let d: f64 = p.points.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum();
        d / (p.times_s[p.len() - 1] - p.times_s[0])
    }

    #[test]
    fn circle_period() {
        let p = path(Geometry::Circle { radius_px: 200.0 }, 450.0, 3.0);
        assert!((p.cycle_s - TAU * 200.0 / 450.0).abs() < 1e-12);
        assert!((p.cycle_s - 2.7925).abs() < 1e-4);
    }

    #[test]
    fn rectangle_cycle_closes() {
        let p = path(Geometry::Rectangle { width_px: 800.0, height_px: 400.0 }, 650.0, 8.0);
        assert!((p.cycle_s - 2400.0 / 650.0).abs() < 1e-12);
        // integrate the path over one cycle at a fine rate
        let fine = gen_trajectory::<f64>(&p.geometry, 650.0, p.cycle_s, 10_000.0, &Screen::default()).unwrap();
        let mut travelled: f64 = fine.points.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum();
        let last = fine.points[fine.len() - 1];
        travelled += (fine.points[0][0] - last[0]).hypot(fine.points[0][1] - last[1]);
        assert!((travelled - 2400.0).abs() < 1.0);
        let curve = Curve::new(&p.geometry);
        let (a, b) = (curve.at(0.0), curve.at(curve.length()));
        assert!((a.0 - b.0).hypot(a.1 - b.1) < 1.0);
    }

    #[test]
    fn speed_audit_all_shapes() {
        for shape in TrajectoryShape::ALL {
            for speed in [450.0, 650.0] {
                let g = Geometry::default_for(shape, &Screen::default());
                let p = path(g, speed, 20.0);
                let v = mean_speed(&p);
                assert!((v / speed - 1.0).abs() < 0.01, "{shape:?} {speed}: {v}");
                let inside = p.points.iter().all(|q| q[0] >= 0.0 && q[0] <= 1920.0 && q[1] >= 0.0 && q[1] <= 1080.0);
                assert!(inside);
            }
        }
    }

    #[test]
    fn sine_returns_to_start() {
        let g = Geometry::default_for(TrajectoryShape::Sine, &Screen::default());
        let curve = Curve::new(&g);
        let (a, b) = (curve.at(0.0), curve.at(curve.length() - 1e-9));
        assert!((a.0 - b.0).hypot(a.1 - b.1) < 1e-3);
    }

    #[test]
    fn overflow() {
        let r = gen_trajectory::<f64>(&Geometry::Circle { radius_px: 600.0 }, 450.0, 1.0, 250.0, &Screen::default());
        assert!(matches!(r, Err(Error::GeometryOverflow(_))));
    }

    #[test]
    fn deviation_basics() {
        let p = [[1.0, 2.0], [3.0, 4.0], [10.0, -2.0]];
        assert_eq!(deviation_points(&p, &p).unwrap(), vec![0.0; 3]);
        let q: Vec<[f64; 2]> = p.iter().map(|v| [v[0] + 3.0, v[1] + 4.0]).collect();
        assert_eq!(deviation_points(&p, &q).unwrap(), vec![5.0; 3]);
        assert!(matches!(deviation_points(&p, &q[..2]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn normalization_cases() {
        assert_eq!(normalize_deviation(&[0.0, 5.0, 10.0], Normalization::PerTrialMax).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_deviation(&[0.0; 4], Normalization::PerTrialMax).unwrap(), vec![0.0; 4]);
        assert_eq!(normalize_deviation(&[2.0, 4.0], Normalization::Reference(8.0)).unwrap(), vec![0.25, 0.5]);
    }

    #[test]
    fn smoothing_cases() {
        let c = smooth_running_mean(&vec![3.5f64; 1000], 250, 1).unwrap();
        assert_eq!(c.len(), 751);
        assert!(c.iter().all(|&v| (v - 3.5).abs() < 1e-12));

        let mut imp = vec![0.0f64; 1000];
        imp[400] = 1.0;
        let s = smooth_running_mean(&imp, 250, 1).unwrap();
        let plateau: Vec<usize> = (0..s.len()).filter(|&i| s[i] > 0.0).collect();
        assert_eq!(plateau.len(), 250);
        assert_eq!((plateau[0], plateau[249]), (151, 400));
        assert!(plateau.iter().all(|&i| (s[i] - 1.0 / 250.0).abs() < 1e-15));
        assert!(matches!(smooth_running_mean(&[1.0; 10], 250, 1), Err(Error::TooShort { .. })));

        let hop = smooth_running_mean(&(0..20).map(f64::from).collect::<Vec<_>>(), 4, 3).unwrap();
        assert_eq!(hop, vec![1.5, 4.5, 7.5, 10.5, 13.5, 16.5]);
    }

    fn trial(seconds: f64, offset: (f64, f64)) -> PursuitTrial<f64> {
        let p = path(Geometry::Circle { radius_px: 200.0 }, 650.0, seconds);
        let gaze = GazeTrace {
            rate_hz: 250.0,
            times_s: p.times_s.clone(),
            points: p.points.iter().map(|q| [q[0] + offset.0, q[1] + offset.1]).collect(),
            validity: vec![true; p.len()],
        };
        PursuitTrial {
            path: p,
            gaze,
            label: 1,
            person_id: 3,
            condition: Condition { shape: TrajectoryShape::Circle, speed: PursuitSpeed::Fast, nback: Some(2) },
            repetition_id: 0,
        }
    }

    #[test]
    fn instance_length_arithmetic() {
        let t = trial(30.0, (1.0, 0.0));
        let raw = trial_deviation(&t, &InstanceParams::default()).unwrap();
        assert_eq!(raw.len(), 7000);
        let inst = build_pursuit_instance(&t, &InstanceParams::default(), Normalization::PerTrialMax).unwrap();
        assert_eq!(inst.values.len(), 6000);
        assert_eq!(inst.adjustment, LengthAdjustment::Truncated(751));

        let short = build_pursuit_instance(&trial(20.0, (1.0, 0.0)), &InstanceParams::default(), Normalization::PerTrialMax).unwrap();
        assert_eq!(short.adjustment, LengthAdjustment::Padded(6000 - (4500 - 249)));
        assert_eq!(short.values.len(), 6000);
    }

    #[test]
    fn perfect_tracking_is_zero() {
        let inst = build_pursuit_instance(&trial(30.0, (0.0, 0.0)), &InstanceParams::default(), Normalization::PerTrialMax).unwrap();
        assert!(inst.values.iter().all(|&v| v == 0.0));
        assert_eq!(inst.values.len(), 6000);
    }

    #[test]
    fn empty_after_trim() {
        let t = trial(1.5, (0.0, 0.0));
        assert!(matches!(build_pursuit_instance(&t, &InstanceParams::default(), Normalization::PerTrialMax), Err(Error::EmptyAfterTrim)));
    }

    #[test]
    fn pupil_windows() {
        let c = TimeSeries::from_samples(30.0, "pupil", "mm", vec![4.0; 450]).unwrap();
        assert_eq!(pupil_window_feature(&c, 5.0).unwrap(), vec![4.0; 3]);
        let step: Vec<f64> = (0..450).map(|k| if k < 150 { 3.5 } else { 4.2 }).collect();
        let s = TimeSeries::from_samples(30.0, "pupil", "mm", step).unwrap();
        let w = pupil_window_feature(&s, 5.0).unwrap();
        assert!(w.iter().zip([3.5, 4.2, 4.2]).all(|(a, b)| (a - b).abs() < 1e-12));
        let diff = w[1] - w[0];
        assert!((0.05..=0.87).contains(&diff));

        let mut gappy = vec![4.0; 300];
        gappy[10] = f64::NAN;
        gappy[150..300].iter_mut().for_each(|v| *v = f64::NAN);
        let g = TimeSeries::from_samples(30.0, "pupil", "mm", gappy).unwrap();
        assert!(matches!(pupil_window_feature(&g, 5.0), Err(Error::NoValidSamples { window: 1 })));
        let short = TimeSeries::from_samples(30.0, "pupil", "mm", vec![4.0; 100]).unwrap();
        assert!(matches!(pupil_window_feature(&short, 5.0), Err(Error::TooShort { .. })));
    }
}
