use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected}, found {found}")]
    GridMismatch { expected: String, found: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("the Ḣ⁻¹ norm on k≠0 modes was requested for a field with x-average content {content:.3e}; pass the remainder")]
    NonZeroAverage { content: f64 },

    #[error("step size {dt} exceeds the stability guard {limit}")]
    StepGuard { dt: f64, limit: f64 },

    #[error("non-finite value at t = {t} ({detail})")]
    NonFinite { t: f64, detail: String },

    #[error("profile is not strictly positive (min = {min:e})")]
    NonPositive { min: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("bracketing failed: {0}")]
    Bracketing(String),

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
