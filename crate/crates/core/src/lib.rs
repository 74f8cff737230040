//! Cognitive-workload sensing from EEG, gaze and pupil signals.
//!
//! The signal-processing modules are generic over [`Real`] (`f32` or `f64`);
//! the aliases below fix them to `f64`.

pub mod config;
pub mod defaults;
pub mod eeg;
pub mod error;
pub mod gaze;
pub mod io;
pub mod learn;
pub mod num;
pub mod signal;
pub mod spectral;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};
pub use num::Real;

pub type TimeSeries = signal::TimeSeries<f64>;
pub type Spectrogram = spectral::Spectrogram<f64>;
pub type SsdResult = spectral::SsdResult<f64>;
pub type PowerCourse = eeg::PowerCourse<f64>;
pub type TrajectoryPath = gaze::TrajectoryPath<f64>;
pub type GazeTrace = gaze::GazeTrace<f64>;
pub type PursuitTrial = gaze::PursuitTrial<f64>;
pub type PursuitInstance = gaze::PursuitInstance<f64>;
