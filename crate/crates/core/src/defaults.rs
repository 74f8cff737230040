//! Protocol constants. Pipelines take these through their parameter structs;
//! nothing downstream repeats the literals.

/// STFT slice length.
pub const WINDOW_S: f64 = 1.0;
/// STFT hop (half-second overlap).
pub const HOP_S: f64 = 0.5;
/// Seconds cut from both ends of an EEG recording.
pub const EDGE_TRIM_S: f64 = 4.0;
/// Broadband pre-filter applied before spectral analysis.
pub const PREFILTER_LOW_HZ: f64 = 0.5;
pub const PREFILTER_HIGH_HZ: f64 = 20.0;

/// Half-width of the individual alpha band around its peak.
pub const IAF_HALF_WIDTH_HZ: f64 = 2.0;
pub const IAF_SEARCH_LOW_HZ: f64 = 6.0;
pub const IAF_SEARCH_HIGH_HZ: f64 = 14.0;
pub const THETA_CENTER_HZ: f64 = 5.0;
pub const THETA_HALF_WIDTH_HZ: f64 = 2.0;

pub const SSD_FLANK_HZ: f64 = 2.0;
pub const SSD_GAP_HZ: f64 = 1.0;
pub const SSD_SHRINKAGE: f64 = 0.05;

pub const BLINK_THRESHOLD_UV: f64 = 200.0;
pub const BLINK_REFRACTORY_S: f64 = 0.2;

pub const OCCIPITAL: [&str; 8] = ["Pz", "P3", "P7", "O1", "Oz", "O2", "P4", "P8"];
pub const FRONTAL: [&str; 7] = ["Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8"];
pub const BLINK_CHANNELS: [&str; 2] = ["Fp1", "Fp2"];

pub const PURSUIT_DROP_HEAD_S: f64 = 2.0;
pub const PURSUIT_SMOOTH_WINDOW: usize = 250;
pub const PURSUIT_SMOOTH_HOP: usize = 1;
pub const PURSUIT_INSTANCE_LEN: usize = 6000;
pub const PURSUIT_SLOW_PX_S: f64 = 450.0;
pub const PURSUIT_FAST_PX_S: f64 = 650.0;
pub const GAZE_RATE_HZ: f64 = 250.0;
pub const DOT_DIAMETER_PX: f64 = 10.0;

pub const PUPIL_WINDOW_S: f64 = 5.0;

pub const NBACK_DISPLAY_S: f64 = 1.0;
pub const NBACK_BLANK_S: f64 = 2.5;

pub const SVM_C: f64 = 1.0;
pub const SVM_EPOCHS: usize = 200;
pub const SVM_SEED: u64 = 0x5eed;

pub const STREAM_BUFFER_S: f64 = 60.0;
