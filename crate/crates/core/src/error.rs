use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("firm index {index} out of range for {n} firms")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("target norm {norm} lies outside the feasible annulus [{inner}, {outer}]")]
    Infeasible { norm: f64, inner: f64, outer: f64 },

    #[error("no sign vector reproduces the scalar target {target} in one dimension")]
    NoSignSolution { target: f64 },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("enumeration supports at most {cap} firms, got {n}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("instance has no network matrix")]
    NoNetwork,

    #[error("decay {delta} violates delta * rho(W) < 1 (rho = {rho})")]
    SpectralCondition { delta: f64, rho: f64 },

    #[error("ownership matrix is not symmetric-common: {0}")]
    AsymmetricOwnership(String),

    #[error("matrix is singular or numerically singular")]
    Singular,

    #[error("{0} does not exist for these parameters")]
    Absent(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
