use std::io;

use thiserror::Error;

/// Errors raised across the engine. The display strings are stable and are
/// matched by the CLI when it maps failures onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scan index: {index} (plan has {len} positions)")]
    InvalidScanIndex { index: usize, len: usize },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("invalid rate: {0}")]
    InvalidRate(f64),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("degenerate probe: {0}")]
    DegenerateProbe(String),

    #[error("degenerate reference: {0}")]
    DegenerateReference(String),

    #[error("invalid overlap: {0}")]
    InvalidOverlap(String),

    #[error("invalid probe: {0}")]
    InvalidProbe(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("data/plan mismatch: {0}")]
    DataPlanMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn geometry(msg: impl Into<String>) -> Error {
    Error::GeometryMismatch(msg.into())
}
