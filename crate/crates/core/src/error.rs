use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported measure: {0}")]
    UnsupportedMeasure(String),
    #[error("unsupported transform {transform} on {model} model")]
    UnsupportedTransform { transform: String, model: String },
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("budget exceeded: {what} needs {required}, limit is {limit}")]
    BudgetExceeded { what: String, required: u128, limit: u128 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::UnsupportedMeasure(_) => "unsupported-measure",
            Error::UnsupportedTransform { .. } => "unsupported-transform",
            Error::UnsupportedModel(_) => "unsupported-model",
            Error::BudgetExceeded { .. } => "budget-exceeded",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::Degenerate(_) => "degenerate",
            Error::Numerical(_) => "numerical",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
