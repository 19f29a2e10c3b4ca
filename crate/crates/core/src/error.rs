use thiserror::Error;

/// Errors raised anywhere in the simulation, detection and benchmark pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: `{field}` {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("degenerate features: training features have zero variance")]
    DegenerateFeatures,

    #[error("standard deviation must be positive, got {0}")]
    NonPositiveStd(f64),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("power iteration did not converge after {iterations} iterations (best estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("labels contain a single class; both 0 and 1 are required")]
    SingleClassLabels,

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("channel memory L={0} exceeds the supported maximum of 12")]
    MemoryTooLarge(usize),

    #[error("noise variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("window of {window} samples exceeds the {available} available samples")]
    WindowTooLarge { window: usize, available: usize },

    #[error("training diverged at epoch {epoch} (loss is not finite)")]
    Divergence { epoch: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
