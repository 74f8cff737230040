//! Run configuration: a flat TOML key-value file. Missing keys fall back to
//! the protocol defaults; command-line flags override both.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::eeg::{BlinkParams, EegParams, ElectrodeReduction};
use crate::error::{Error, Result};
use crate::gaze::{InstanceParams, NormalizationScope};
use crate::learn::SvmParams;
use crate::spectral::{BandSpec, IafParams, SsdParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub edge_trim_s: f64,
    pub prefilter_low_hz: f64,
    pub prefilter_high_hz: f64,
    pub iaf_half_width_hz: f64,
    pub iaf_search_low_hz: f64,
    pub iaf_search_high_hz: f64,
    pub theta_center_hz: f64,
    pub theta_half_width_hz: f64,
    pub ssd_flank_hz: f64,
    pub ssd_gap_hz: f64,
    pub ssd_shrinkage: f64,
    pub electrode_reduction: ElectrodeReduction,
    pub blink_threshold_uv: f64,
    pub blink_refractory_s: f64,
    pub pursuit_drop_head_s: f64,
    pub pursuit_smooth_window: usize,
    pub pursuit_smooth_hop: usize,
    pub pursuit_instance_len: usize,
    pub normalization: NormalizationScope,
    pub pupil_window_s: f64,
    pub svm_c: f64,
    pub svm_epochs: usize,
    pub seed: u64,
    pub stream_buffer_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            window_s: defaults::WINDOW_S,
            hop_s: defaults::HOP_S,
            edge_trim_s: defaults::EDGE_TRIM_S,
            prefilter_low_hz: defaults::PREFILTER_LOW_HZ,
            prefilter_high_hz: defaults::PREFILTER_HIGH_HZ,
            iaf_half_width_hz: defaults::IAF_HALF_WIDTH_HZ,
            iaf_search_low_hz: defaults::IAF_SEARCH_LOW_HZ,
            iaf_search_high_hz: defaults::IAF_SEARCH_HIGH_HZ,
            theta_center_hz: defaults::THETA_CENTER_HZ,
            theta_half_width_hz: defaults::THETA_HALF_WIDTH_HZ,
            ssd_flank_hz: defaults::SSD_FLANK_HZ,
            ssd_gap_hz: defaults::SSD_GAP_HZ,
            ssd_shrinkage: defaults::SSD_SHRINKAGE,
            electrode_reduction: ElectrodeReduction::default(),
            blink_threshold_uv: defaults::BLINK_THRESHOLD_UV,
            blink_refractory_s: defaults::BLINK_REFRACTORY_S,
            pursuit_drop_head_s: defaults::PURSUIT_DROP_HEAD_S,
            pursuit_smooth_window: defaults::PURSUIT_SMOOTH_WINDOW,
            pursuit_smooth_hop: defaults::PURSUIT_SMOOTH_HOP,
            pursuit_instance_len: defaults::PURSUIT_INSTANCE_LEN,
            normalization: NormalizationScope::default(),
            pupil_window_s: defaults::PUPIL_WINDOW_S,
            svm_c: defaults::SVM_C,
            svm_epochs: defaults::SVM_EPOCHS,
            seed: defaults::SVM_SEED,
            stream_buffer_s: defaults::STREAM_BUFFER_S,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn eeg_params(&self) -> EegParams {
        EegParams {
            prefilter_low_hz: self.prefilter_low_hz,
            prefilter_high_hz: self.prefilter_high_hz,
            window_s: self.window_s,
            hop_s: self.hop_s,
            edge_trim_s: Some(self.edge_trim_s),
            reduction: self.electrode_reduction,
            ssd: SsdParams { flank_hz: self.ssd_flank_hz, gap_hz: self.ssd_gap_hz, shrinkage: self.ssd_shrinkage },
        }
    }

    pub fn iaf_params(&self) -> Result<IafParams> {
        let (lo, hi) = (self.iaf_search_low_hz, self.iaf_search_high_hz);
        Ok(IafParams {
            window_s: self.window_s,
            hop_s: self.hop_s,
            half_width_hz: self.iaf_half_width_hz,
            search: BandSpec::new((lo + hi) / 2.0, lo, hi)?,
            ..IafParams::default()
        })
    }

    pub fn theta_band(&self) -> Result<BandSpec> {
        BandSpec::around(self.theta_center_hz, self.theta_half_width_hz)
    }

    pub fn blink_params(&self) -> BlinkParams {
        BlinkParams { threshold_uv: self.blink_threshold_uv, refractory_s: self.blink_refractory_s }
    }

    pub fn instance_params(&self) -> InstanceParams {
        InstanceParams {
            drop_head_s: self.pursuit_drop_head_s,
            smooth_window: self.pursuit_smooth_window,
            smooth_hop: self.pursuit_smooth_hop,
            target_len: self.pursuit_instance_len,
        }
    }

    pub fn svm_params(&self) -> SvmParams {
        SvmParams { c: self.svm_c, epochs: self.svm_epochs, seed: self.seed }
    }
}
