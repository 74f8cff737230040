use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // signal
    #[error("window of {seconds} s rounds to zero samples")]
    ZeroLengthWindow { seconds: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input too short: need {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("channel `{0}` appears more than once")]
    DuplicateChannel(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    // spectral
    #[error("frequency {freq_hz} Hz is at or above the Nyquist frequency {nyquist_hz} Hz")]
    NyquistViolation { freq_hz: f64, nyquist_hz: f64 },
    #[error("band {low_hz}-{high_hz} Hz does not overlap the spectrum")]
    BandOutOfRange { low_hz: f64, high_hz: f64 },
    #[error("no positive eyes-closed minus eyes-open difference inside the search band")]
    NoAlphaPeak,
    #[error("regularized noise covariance is not positive definite")]
    SingularNoise,
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    RateMismatch(f64, f64),

    // eeg
    #[error("baseline mean power {0} is not positive")]
    ZeroBaseline(f64),
    #[error("alpha power is zero at frame {frame}")]
    ZeroAlphaFrame { frame: usize },
    #[error("required channel `{0}` missing")]
    MissingChannel(String),

    // gaze
    #[error("trajectory does not fit the screen: {0}")]
    GeometryOverflow(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("nothing left after dropping the trial head")]
    EmptyAfterTrim,
    #[error("window {window} has no valid samples")]
    NoValidSamples { window: usize },

    // learn
    #[error("training data holds a single class")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cross-validation needs at least two persons")]
    SinglePerson,
    #[error("degenerate fold: {0}")]
    DegenerateFold(String),
    #[error("need at least {needed} repetitions, found {got}")]
    TooFewRepetitions { needed: usize, got: usize },
    #[error("predictor is constant")]
    ConstantPredictor,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("confusion matrix is empty")]
    EmptyConfusion,

    // synth
    #[error("match rate {rate} infeasible for n = {n} with {length} stimuli")]
    InfeasibleRate { n: usize, length: usize, rate: f64 },

    // stream
    #[error("channel layout mismatch: {0}")]
    ChannelMismatch(String),
    #[error("stream buffer overflow (capacity {capacity} samples)")]
    BufferOverflow { capacity: usize },

    // io
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("timestamp jitter at row {row}: expected {expected_s} s, found {found_s} s")]
    RateJitter { row: usize, expected_s: f64, found_s: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
}
