use thiserror::Error;

use crate::calibration::TracePoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("index {index} out of range for {len} entries")]
    Index { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("training diverged at epoch {epoch} (loss is not finite)")]
    Divergence { epoch: usize },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("degenerate model: clean accuracy {acc_clean} equals chance level {chance}")]
    DegenerateModel { acc_clean: f64, chance: f64 },

    #[error("calibration failed: {message}")]
    Calibration { message: String, trace: Vec<TracePoint> },

    #[error("correlation undefined: {0} has zero variance")]
    UndefinedCorrelation(&'static str),

    #[error("sparseness undefined for an all-zero attribution")]
    UndefinedSparseness,

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("sample too small: need at least {min} pairs, got {got}")]
    SmallSample { min: usize, got: usize },

    #[error("optimization diverged at step {step}")]
    Optimization { step: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl std::fmt::Debug, got: impl std::fmt::Debug) -> Self {
        Error::Dimension {
            expected: format!("{expected:?}"),
            got: format!("{got:?}"),
        }
    }

    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}
