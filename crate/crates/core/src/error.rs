use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown curve `{0}` (known: parabola, cubic, exp, sqrt, circle-arc)")]
    UnknownCurve(String),

    #[error("invalid curve `{id}`: {reason}")]
    InvalidCurve { id: String, reason: String },

    #[error("curve `{0}` has no exact polynomial form")]
    MissingExactForm(String),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, target {target:.3e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("need at least {needed} usable records for a fit, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("unknown acceptance suite `{0}`")]
    UnknownSuite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
