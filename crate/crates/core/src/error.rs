use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument fell outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("mode index {index} out of range for a {modes}-mode state")]
    ModeIndex { index: usize, modes: usize },

    /// A post-selection was requested on an outcome the state cannot produce.
    #[error("measurement outcome {outcome} has zero probability")]
    ImpossibleOutcome { outcome: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("two-mode workspace of {requested} basis states exceeds the cap of {cap}")]
    WorkspaceTooLarge { requested: usize, cap: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }
}
