//! Frequency-domain kernels.

mod filter;
mod iaf;
pub mod linalg;
mod ssd;
mod stft;

pub use filter::{bandpass, Biquad, SosFilter};
pub use iaf::{detect_iaf, IafParams};
pub use ssd::{flank_bands, ssd, SsdParams, SsdResult};
pub use stft::{band_power, stft_power, stft_power_samples, PowerEstimator, Spectrogram};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A frequency band in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub center_hz: f64,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandSpec {
    pub fn new(center_hz: f64, low_hz: f64, high_hz: f64) -> Result<Self> {
        if !(low_hz > 0.0 && low_hz < high_hz && low_hz <= center_hz && center_hz <= high_hz) {
            return Err(Error::InvalidParameter(format!(
                "band needs 0 < low <= center <= high, low < high; got {low_hz} / {center_hz} / {high_hz}"
            )));
        }
        Ok(Self { center_hz, low_hz, high_hz })
    }

    /// `center ± half_width`.
    pub fn around(center_hz: f64, half_width_hz: f64) -> Result<Self> {
        Self::new(center_hz, center_hz - half_width_hz, center_hz + half_width_hz)
    }

    /// The frontal theta band, 5 ± 2 Hz.
    pub fn theta() -> Self {
        Self::around(crate::defaults::THETA_CENTER_HZ, crate::defaults::THETA_HALF_WIDTH_HZ)
            .expect("default theta band is valid")
    }

    pub fn width_hz(&self) -> f64 {
        self.high_hz - self.low_hz
    }
}

impl std::fmt::Display for BandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{} Hz (peak {} Hz)", self.low_hz, self.high_hz, self.center_hz)
    }
}
