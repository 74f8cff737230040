//! Recording CSV dialect, annotation files and atomic writes.
//!
//! ```text
//! # rate_hz=250
//! # channels=Oz:uV,Pz:uV
//! # t0_s=0
//! 0,1.25,-0.5
//! 0.004,1.5,-0.25
//! ```
//!
//! Each row is a timestamp followed by one value per channel. Floats are
//! printed in shortest round-trip form, so save → load is bit-exact. NaN marks
//! an invalid sample. Annotations live beside the recording in
//! `<stem>.annotations.csv` with a `time_s,tag` header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gaze::{Condition, GazeTrace, Geometry, PursuitTrial, Screen, TrajectoryPath};
use crate::signal::{Annotation, Channel, TimeSeries};

pub const KNOWN_UNITS: [&str; 10] = ["uV", "µV", "mV", "V", "mm", "px", "deg", "s", "a.u.", "mixed"];

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn annotation_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.annotations.csv"))
}

pub fn recording_to_string(series: &TimeSeries<f64>) -> String {
    let mut out = String::new();
    out.push_str(&format!("# rate_hz={}\n", series.rate_hz()));
    let chans: Vec<String> = series.channels().iter().map(|c| format!("{}:{}", c.label, c.unit)).collect();
    out.push_str(&format!("# channels={}\n", chans.join(",")));
    out.push_str(&format!("# t0_s={}\n", series.t0_s()));
    for k in 0..series.n_samples() {
        out.push_str(&series.time_of(k).to_string());
        for row in series.data() {
            out.push(',');
            out.push_str(&row[k].to_string());
        }
        out.push('\n');
    }
    out
}

/// Save a recording, plus its annotation file when it has annotations.
pub fn save_recording(series: &TimeSeries<f64>, path: &Path) -> Result<()> {
    write_atomic(path, recording_to_string(series).as_bytes())?;
    let ann = annotation_path(path);
    if series.annotations().is_empty() {
        if ann.exists() {
            fs::remove_file(ann)?;
        }
    } else {
        let mut text = String::from("time_s,tag\n");
        for a in series.annotations() {
            text.push_str(&format!("{},{}\n", a.time_s, a.tag));
        }
        write_atomic(&ann, text.as_bytes())?;
    }
    Ok(())
}

/// Parsed recording plus non-fatal warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub series: TimeSeries<f64>,
    pub warnings: Vec<String>,
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse { line, reason: format!("bad {what} `{}`", field.trim()) })
}

/// Parse recording text. Line numbers in errors are 1-based.
pub fn parse_recording(text: &str) -> Result<Loaded> {
    let mut rate_hz = None;
    let mut channels: Option<Vec<Channel>> = None;
    let mut t0_s = 0.0;
    let mut warnings = vec![];
    let mut rows: Vec<(usize, &str)> = vec![];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(h) = l.strip_prefix('#') {
            let Some((key, value)) = h.trim().split_once('=') else { continue };
            match key.trim() {
                "rate_hz" => rate_hz = Some(parse_f64(value, line, "rate")?),
                "t0_s" => t0_s = parse_f64(value, line, "start time")?,
                "channels" => {
                    let mut chans = vec![];
                    for spec in value.split(',') {
                        let (label, unit) = spec.split_once(':').unwrap_or((spec, ""));
                        let (label, unit) = (label.trim(), unit.trim());
                        if label.is_empty() {
                            return Err(Error::Parse { line, reason: "empty channel label".into() });
                        }
                        if !KNOWN_UNITS.contains(&unit) {
                            let w = format!("channel `{label}` has unknown unit `{unit}`");
                            log::warn!("{w}");
                            warnings.push(w);
                        }
                        chans.push(Channel::new(label, unit));
                    }
                    channels = Some(chans);
                }
                _ => {}
            }
            continue;
        }
        rows.push((line, l));
    }
    let rate_hz = rate_hz.ok_or(Error::Parse { line: 1, reason: "missing `# rate_hz=` header".into() })?;
    let channels = channels.ok_or(Error::Parse { line: 1, reason: "missing `# channels=` header".into() })?;
    if !(rate_hz > 0.0) {
        return Err(Error::Parse { line: 1, reason: format!("rate {rate_hz} must be positive") });
    }
    let mut data = vec![Vec::with_capacity(rows.len()); channels.len()];
    for (k, &(line, l)) in rows.iter().enumerate() {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != channels.len() + 1 {
            return Err(Error::Parse {
                line,
                reason: format!("expected {} columns, found {}", channels.len() + 1, fields.len()),
            });
        }
        let t = parse_f64(fields[0], line, "timestamp")?;
        let expected = t0_s + k as f64 / rate_hz;
        if (t - expected).abs() > 0.5 / rate_hz {
            return Err(Error::RateJitter { row: line, expected_s: expected, found_s: t });
        }
        for (row, f) in data.iter_mut().zip(&fields[1..]) {
            row.push(parse_f64(f, line, "sample")?);
        }
    }
    Ok(Loaded { series: TimeSeries::new(rate_hz, channels, data, t0_s)?, warnings })
}

pub fn parse_annotations(text: &str) -> Result<Vec<Annotation>> {
    let mut out = vec![];
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || (i == 0 && l.starts_with("time_s")) {
            continue;
        }
        let (t, tag) = l.split_once(',').ok_or(Error::Parse { line: i + 1, reason: "expected `time_s,tag`".into() })?;
        out.push(Annotation::new(parse_f64(t, i + 1, "annotation time")?, tag.trim()));
    }
    Ok(out)
}

pub fn load_recording_with_warnings(path: &Path) -> Result<Loaded> {
    let mut loaded = parse_recording(&fs::read_to_string(path)?)?;
    let ann = annotation_path(path);
    if ann.exists() {
        let annotations = parse_annotations(&fs::read_to_string(ann)?)?;
        loaded.series = loaded.series.with_annotations(annotations)?;
    }
    Ok(loaded)
}

pub fn load_recording(path: &Path) -> Result<TimeSeries<f64>> {
    load_recording_with_warnings(path).map(|l| l.series)
}

// ── pursuit recordings ─────────────────────────────────

pub const PURSUIT_CHANNELS: [&str; 4] = ["target_x", "target_y", "gaze_x", "gaze_y"];

/// Target and gaze as four pixel channels; invalid gaze samples become NaN.
pub fn gaze_to_series(path: &TrajectoryPath<f64>, gaze: &GazeTrace<f64>) -> Result<TimeSeries<f64>> {
    if path.len() != gaze.len() {
        return Err(Error::LengthMismatch { left: path.len(), right: gaze.len() });
    }
    let col = |f: &dyn Fn(usize) -> f64| (0..path.len()).map(f).collect::<Vec<f64>>();
    let g = |k: usize, axis: usize| if gaze.validity[k] { gaze.points[k][axis] } else { f64::NAN };
    let data = vec![
        col(&|k| path.points[k][0]),
        col(&|k| path.points[k][1]),
        col(&|k| g(k, 0)),
        col(&|k| g(k, 1)),
    ];
    let channels = PURSUIT_CHANNELS.iter().map(|l| Channel::new(*l, "px")).collect();
    TimeSeries::new(path.rate_hz, channels, data, path.times_s.first().copied().unwrap_or(0.0))
}

/// Trial metadata stored as `key=value` annotations at the recording start.
pub fn trial_annotations(t0_s: f64, trial: &PursuitTrial<f64>) -> Vec<Annotation> {
    let mut tags = vec![
        format!("person={}", trial.person_id),
        format!("shape={}", trial.condition.shape.as_str()),
        format!("speed={}", trial.condition.speed.as_str()),
        format!("label={}", trial.label),
        format!("repetition={}", trial.repetition_id),
    ];
    if let Some(n) = trial.condition.nback {
        tags.push(format!("nback={n}"));
    }
    tags.into_iter().map(|t| Annotation::new(t0_s, t)).collect()
}

fn tag<'a>(series: &'a TimeSeries<f64>, key: &str) -> Option<&'a str> {
    series.annotations().iter().find_map(|a| a.tag.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

fn required_tag<T: std::str::FromStr>(series: &TimeSeries<f64>, key: &str) -> Result<T> {
    let v = tag(series, key).ok_or_else(|| Error::MissingChannel(format!("annotation `{key}=`")))?;
    v.parse().map_err(|_| Error::Parse { line: 0, reason: format!("bad `{key}` annotation `{v}`") })
}

/// Rebuild a trial from a four-channel pursuit recording with metadata tags.
pub fn series_to_trial(series: &TimeSeries<f64>) -> Result<PursuitTrial<f64>> {
    let cols: Vec<&[f64]> = PURSUIT_CHANNELS
        .iter()
        .map(|l| series.channel(l).ok_or_else(|| Error::MissingChannel((*l).into())))
        .collect::<Result<_>>()?;
    let shape = tag(series, "shape").ok_or_else(|| Error::MissingChannel("annotation `shape=`".into()))?.parse()?;
    let speed = match tag(series, "speed") {
        Some("slow") => crate::gaze::PursuitSpeed::Slow,
        Some("fast") => crate::gaze::PursuitSpeed::Fast,
        other => return Err(Error::Parse { line: 0, reason: format!("bad `speed` annotation {other:?}") }),
    };
    let nback = tag(series, "nback").map(|v| v.parse()).transpose().map_err(|_| Error::Parse { line: 0, reason: "bad `nback` annotation".into() })?;
    let condition = Condition { shape, speed, nback };
    let n = series.n_samples();
    let times_s: Vec<f64> = (0..n).map(|k| series.time_of(k)).collect();
    let screen = Screen::default();
    let geometry = Geometry::default_for(shape, &screen);
    let template: TrajectoryPath<f64> = crate::gaze::gen_trajectory(&geometry, speed.px_per_s(), 0.0, series.rate_hz(), &screen)?;
    let path = TrajectoryPath { times_s: times_s.clone(), points: (0..n).map(|k| [cols[0][k], cols[1][k]]).collect(), ..template };
    let validity: Vec<bool> = (0..n).map(|k| !(cols[2][k].is_nan() || cols[3][k].is_nan())).collect();
    let gaze = GazeTrace { rate_hz: series.rate_hz(), times_s, points: (0..n).map(|k| [cols[2][k], cols[3][k]]).collect(), validity };
    Ok(PursuitTrial {
        path,
        gaze,
        label: required_tag(series, "label")?,
        person_id: required_tag(series, "person")?,
        condition,
        repetition_id: required_tag(series, "repetition")?,
    })
}

// ── tables and plots ───────────────────────────────────

/// Header line plus rows, shortest round-trip floats.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Minimal SVG line plot of `y` against `x`.
pub fn svg_polyline(title: &str, x: &[f64], y: &[f64]) -> String {
    let (w, h, pad) = (640.0, 320.0, 32.0);
    let finite = |v: &[f64]| -> (f64, f64) {
        let lo = v.iter().copied().filter(|a| a.is_finite()).fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().filter(|a| a.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else if lo.is_finite() {
            (lo - 0.5, lo + 0.5)
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = finite(x);
    let (y0, y1) = finite(y);
    let pts: Vec<String> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| {
            let px = pad + (a - x0) / (x1 - x0) * (w - 2.0 * pad);
            let py = h - pad - (b - y0) / (y1 - y0) * (h - 2.0 * pad);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    let escaped = title.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{pad}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{escaped}</text>\n\
         <polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"{}\"/>\n</svg>\n",
        pts.join(" ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "# rate_hz=4\n# channels=a:uV,b:mm\n# t0_s=0\n0,1,2\n0.25,3,4\n0.5,5,6\n0.75,7,8\n";

    #[test]
    fn minimal_fixture() {
        let l = parse_recording(MINIMAL).unwrap();
        assert_eq!(l.series.n_samples(), 4);
        assert_eq!(l.series.channel("b").unwrap(), &[2.0, 4.0, 6.0, 8.0]);
        assert_eq!(l.series.channels()[1].unit, "mm");
        assert!(l.warnings.is_empty());
    }

    #[test]
    fn duplicated_timestamp_is_jitter() {
        let text = MINIMAL.replace("0.5,5,6", "0.25,5,6");
        match parse_recording(&text) {
            Err(Error::RateJitter { row, .. }) => assert_eq!(row, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        assert!(matches!(parse_recording(&MINIMAL.replace("0.25,3,4", "0.25,3")), Err(Error::Parse { line: 5, .. })));
        assert!(matches!(parse_recording(&MINIMAL.replace("3,4", "3,x")), Err(Error::Parse { line: 5, .. })));
        assert!(matches!(parse_recording("0,1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_unit_warns() {
        let l = parse_recording(&MINIMAL.replace("b:mm", "b:furlong")).unwrap();
        assert_eq!(l.warnings.len(), 1);
    }

    #[test]
    fn roundtrip_with_annotations() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rec.csv");
        let data = vec![vec![0.1, -2.5e-7, f64::MAX, 1.0 / 3.0], vec![f64::NAN, 0.0, -0.0, 7.0]];
        let s = TimeSeries::new(3.0, vec![Channel::new("x", "uV"), Channel::new("y", "px")], data, 1.5)
            .unwrap()
            .with_annotations(vec![Annotation::new(2.0, "onset, 2")])
            .unwrap();
        save_recording(&s, &p).unwrap();
        let back = load_recording(&p).unwrap();
        assert_eq!(back.channels(), s.channels());
        assert_eq!(back.annotations(), s.annotations());
        assert_eq!(back.t0_s(), 1.5);
        for (a, b) in back.data().iter().flatten().zip(s.data().iter().flatten()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
        assert!(annotation_path(&p).ends_with("rec.annotations.csv"));
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_polyline("a<b", &[0.0, 1.0, 2.0], &[1.0, 3.0, 2.0]);
        assert!(s.starts_with("<svg") && s.contains("a&lt;b") && s.trim_end().ends_with("</svg>"));
    }
}
