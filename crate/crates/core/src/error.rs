use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Every variant maps to a stable machine-readable reason code through
/// [`Error::reason_code`], which the CLI writes into run reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value {value} at node {index} (r = {radius})")]
    NonFinite { index: usize, radius: f64, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("blow-up detected: w(0) = {peak:.6} exceeds ceiling {ceiling:.6}")]
    BlowUp { peak: f64, ceiling: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("diagnostic error: {0}")]
    Diagnostic(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn reason_code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::NonFinite { .. } => "non_finite",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::BlowUp { .. } => "blow_up",
            Error::Precondition(_) => "precondition",
            Error::Diagnostic(_) => "diagnostic",
            Error::Usage(_) => "usage",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
