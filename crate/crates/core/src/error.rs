use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad or inconsistent input data.
    Input,
    /// A numerical procedure failed or its preconditions were not met.
    Numeric,
    /// Invalid configuration.
    Config,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,
    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("structural error at row {row}: {message}")]
    Structure { row: u64, message: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("alpha {alpha} outside achieved range [{lo}, {hi}]")]
    AlphaRange { alpha: f64, lo: f64, hi: f64 },
    #[error("rank-deficient regression: {0}")]
    Rank(String),
    #[error("integration unstable for component {component} near {temperature_k:.2} K; use a smaller temperature step")]
    Stability { component: usize, temperature_k: f64 },
    #[error("no sign change in bracket: {0}")]
    Bracket(String),
    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EmptyInput
            | Error::Parse { .. }
            | Error::Structure { .. }
            | Error::Input(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorKind::Input,
            Error::Config(_) => ErrorKind::Config,
            Error::Domain(_)
            | Error::Resolution(_)
            | Error::Precondition(_)
            | Error::AlphaRange { .. }
            | Error::Rank(_)
            | Error::Stability { .. }
            | Error::Bracket(_)
            | Error::Training { .. } => ErrorKind::Numeric,
        }
    }
}
