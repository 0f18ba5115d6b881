use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("series is empty")]
    EmptySeries,

    #[error("window length must be positive")]
    ZeroWindow,

    #[error("window length {window} exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },

    #[error("series length {len} is shorter than twice the subsequence length {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("subsequence [{start}, +{window}) does not fit a series of length {len}")]
    BadSubsequence {
        start: usize,
        window: usize,
        len: usize,
    },

    #[error("mask interval [{lo}, {hi}] outside profile range [0, {last}]")]
    MaskOutOfRange { lo: usize, hi: usize, last: usize },

    #[error("position {position} has no admissible nearest-neighbor candidate")]
    InfeasibleMask { position: usize },

    #[error("defense aborted in sensitive segment [{start}, {end}]")]
    SegmentFailed {
        start: usize,
        end: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scenario infeasible: {0}")]
    Scenario(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the data or its contract rather than the environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
