use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(
        "Newton iteration did not converge after {iterations} iterations \
         (residual {residual:.3e}, last iterate {last_iterate:?})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: [f64; 3],
    },

    #[error("fixed point is nonphysical: {species} = {value:.6e} < 0")]
    NonphysicalRoot { species: &'static str, value: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("eigenvector basis is near-singular (condition estimate {0:.3e})")]
    SingularBasis(f64),

    #[error("covariance not factorizable after jitter (min eigenvalue {0:.3e})")]
    Factorization(f64),

    #[error("numerical blow-up detected at t = {0} s")]
    BlowUp(f64),

    #[error("step exceeds the RK4 stability limit at t = {time} s (dt times stiffness bound = {ratio:.3})")]
    StiffnessLimit { time: f64, ratio: f64 },

    #[error("noise trace too short: covers {have} s, need {need} s")]
    TraceTooShort { have: f64, need: f64 },

    #[error("no oscillation detected: {0}")]
    NoOscillation(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
