use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid range: lo {lo} > hi {hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("nothing to synthesize: image already has {channels} of {c_max} bands")]
    NothingToSynthesize { channels: usize, c_max: usize },

    #[error("too few bands for PAN synthesis: {0} (need at least 2)")]
    TooFewBands(usize),

    #[error("band index {index} out of range for {channels}-band image")]
    BandIndexError { index: usize, channels: usize },

    #[error("image too small: {0}")]
    ImageTooSmall(String),

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("activation tape does not match parameters: {0}")]
    StaleTape(String),

    #[error("non-finite gradient in parameter group `{group}`")]
    NonFiniteGradient { group: &'static str },

    #[error("metric not applicable: {0}")]
    NotApplicable(String),

    #[error("corpus at {0} has no readable images")]
    EmptyCorpus(PathBuf),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}
