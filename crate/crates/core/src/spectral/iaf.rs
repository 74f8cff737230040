//! Individual alpha frequency from an eyes-open / eyes-closed pair.

use serde::{Deserialize, Serialize};

use super::stft::{band_bins, stft_power};
use super::BandSpec;
use crate::defaults;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::signal::{make_window_plan, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IafParams {
    pub window_s: f64,
    pub hop_s: f64,
    pub half_width_hz: f64,
    pub search: BandSpec,
    /// Shortest accepted recording.
    pub min_duration_s: f64,
}

impl Default for IafParams {
    fn default() -> Self {
        let (lo, hi) = (defaults::IAF_SEARCH_LOW_HZ, defaults::IAF_SEARCH_HIGH_HZ);
        Self {
            window_s: defaults::WINDOW_S,
            hop_s: defaults::HOP_S,
            half_width_hz: defaults::IAF_HALF_WIDTH_HZ,
            search: BandSpec { center_hz: (lo + hi) / 2.0, low_hz: lo, high_hz: hi },
            min_duration_s: 2.0,
        }
    }
}

/// Peak of the eyes-closed minus eyes-open mean spectrum inside the search band,
/// reported at bin resolution, widened to `peak ± half_width`.
pub fn detect_iaf<T: Real>(
    eyes_open: &TimeSeries<T>,
    eyes_closed: &TimeSeries<T>,
    params: &IafParams,
) -> Result<BandSpec> {
    if eyes_open.rate_hz() != eyes_closed.rate_hz() {
        return Err(Error::RateMismatch(eyes_open.rate_hz(), eyes_closed.rate_hz()));
    }
    let rate = eyes_open.rate_hz();
    let needed = (params.min_duration_s * rate).round() as usize;
    for s in [eyes_open, eyes_closed] {
        if s.n_samples() < needed {
            return Err(Error::TooShort { needed, got: s.n_samples() });
        }
    }
    let open = stft_power(eyes_open, &make_window_plan(eyes_open, params.window_s, params.hop_s)?)?;
    let closed = stft_power(eyes_closed, &make_window_plan(eyes_closed, params.window_s, params.hop_s)?)?;
    let open_mean = open.mean_spectrum();
    let closed_mean = closed.mean_spectrum();
    let bins = band_bins(&open.freqs_hz, params.search.low_hz, params.search.high_hz)?;

    let mut best: Option<(usize, T)> = None;
    for b in bins {
        let diff = closed_mean[b] - open_mean[b];
        if best.is_none_or(|(_, d)| diff > d) {
            best = Some((b, diff));
        }
    }
    match best {
        Some((b, diff)) if diff > T::zero() => BandSpec::around(open.freqs_hz[b], params.half_width_hz),
        _ => Err(Error::NoAlphaPeak),
    }
}
