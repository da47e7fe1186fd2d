use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure in {what} (residual {residual:.3e})")]
    NumericFailure { what: String, residual: f64 },

    #[error("norm is not admissible: {0}")]
    NotAdmissible(String),

    #[error("chart is not immersed at (u, v) = ({u}, {v})")]
    NotImmersed { u: f64, v: f64 },

    #[error("orientation error: {0}")]
    Orientation(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("no path between the requested points")]
    NoPath,

    #[error("amplitude {epsilon} breaks convexity; largest admissible amplitude is about {max_epsilon}")]
    EpsilonTooLarge { epsilon: f64, max_epsilon: f64 },

    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    pub(crate) fn numeric(what: impl Into<String>, residual: f64) -> Self {
        Error::NumericFailure {
            what: what.into(),
            residual,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
