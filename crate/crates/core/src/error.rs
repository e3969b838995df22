use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unit mismatch: {0}")]
    UnitMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit failed: {reason} (residual norm {residual:.3e})")]
    FitFailure { reason: String, residual: f64 },

    /// The calibration objective has no usable minimum. `profile` holds the
    /// coarse scan as `(alpha, band_power)` pairs.
    #[error("degenerate objective: {reason}")]
    Degenerate {
        reason: String,
        profile: Vec<(f64, f64)>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("component `{component}` failed: {source}")]
    Component {
        component: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
