//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by signal synthesis, estimation, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a precondition (non-finite value, bad range, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A signal carries no AC content where some is required.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// The sweep does not contain at least one full cycle of the tone being
    /// estimated, so frequency estimation is unreliable.
    #[error("insufficient bandwidth: {0}")]
    InsufficientBandwidth(String),

    /// Too few oscillation cycles to measure an amplitude envelope.
    #[error("insufficient cycles: {0}")]
    InsufficientCycles(String),

    /// The pair of recovered tones is not separated by the configured
    /// exposure time, indicating the exposure varied during the sweep.
    #[error("inconsistent exposure: {0}")]
    InconsistentExposure(String),

    /// A metric (e.g. PSNR) has no defined value for the given inputs.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Requested estimator cannot decode signals from the given capture mode.
    #[error("estimator {estimator} is incompatible with {mode} capture")]
    EstimatorMismatch { estimator: String, mode: String },

    /// Malformed input file; `offset` is the byte offset (binary formats) or
    /// line number (text formats) where parsing stopped.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Error raised while processing one pixel of a scene.
    #[error("pixel ({row}, {col}): {source}")]
    Pixel {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind, used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DegenerateSignal(_) => "degenerate_signal",
            Error::InsufficientBandwidth(_) => "insufficient_bandwidth",
            Error::InsufficientCycles(_) => "insufficient_cycles",
            Error::InconsistentExposure(_) => "inconsistent_exposure",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::EstimatorMismatch { .. } => "estimator_mismatch",
            Error::Parse { .. } => "parse",
            Error::Pixel { source, .. } => source.kind(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attach pixel coordinates to an error bubbling out of a per-pixel
    /// operation.
    pub(crate) fn at_pixel(self, row: usize, col: usize) -> Self {
        Error::Pixel {
            row,
            col,
            source: Box::new(self),
        }
    }
}
