use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed input at line {line}: {reason}")]
    MalformedInput { line: usize, reason: String },

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("timestamps are not strictly increasing at row {row}")]
    NonMonotonicTime { row: usize },

    #[error("empty frame sequence")]
    EmptyFrameSequence,

    #[error("frame {index} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        index: usize,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("signal too short: {duration_s:.3} s available, {needed_s:.3} s required")]
    SignalTooShort { duration_s: f64, needed_s: f64 },

    #[error("band [{f_low}, {f_high}] Hz is invalid for sample rate {sample_rate} Hz")]
    BandOutOfRange {
        f_low: f64,
        f_high: f64,
        sample_rate: f64,
    },

    #[error("first harmonic {0} Hz outside [0.5, 3.0] Hz")]
    F1hOutOfRange(f64),

    #[error("no cardiac periods found")]
    NoPeriodsFound,

    #[error("need at least {needed} periods, got {got}")]
    TooFewPeriods { needed: usize, got: usize },

    #[error("h(t) period has {peaks} peaks and {valleys} valleys, expected 2 and 3")]
    HMorphologyMismatch { peaks: usize, valleys: usize },

    #[error("zero time gap between fiducial points {0} and {1}")]
    DegenerateGap(usize, usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("within-class scatter is singular")]
    SingularScatter,

    #[error("training loss became non-finite at epoch {0}")]
    NonFiniteLoss(usize),

    #[error("no sub-model for morphology {0}")]
    UnknownMorphology(String),

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    FeatureDimMismatch { expected: usize, got: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("undefined rate: {0}")]
    UndefinedRate(&'static str),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("empty evaluation subset")]
    EmptySubset,

    #[error("need at least 2 subjects, got {0}")]
    TooFewSubjects(usize),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::MalformedInput {
            line: e.line(),
            reason: e.to_string(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::MalformedInput {
            line,
            reason: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
