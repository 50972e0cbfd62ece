use thiserror::Error;

/// Errors raised by the geometry, escort and dynamics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the domain of an operation (point outside a chart,
    /// model mismatch, out-of-range parameter).
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative numeric procedure did not converge.
    #[error("numeric error: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },
    /// An integrated trajectory left the chart; `state` is the last valid one.
    #[error("trajectory left the chart at t = {time}: last valid state {state:?}")]
    DomainExit { time: f64, state: Vec<f64> },
    /// Path continuation could not decide which lift to take.
    #[error("lift error at index {index}: {message}")]
    Lift { index: usize, message: String },
    /// Escort fitting found nothing to fit.
    #[error("fit error: {0}")]
    Fit(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// No geodesic joins the requested pair of boundary directions.
    #[error("visibility error: {0}")]
    Visibility(String),
    #[error("operation `{op}` is not supported on model {model}")]
    UnsupportedModel { op: &'static str, model: String },
    /// An observable or map failed at a visited state.
    #[error("evaluation error at index {index}: {message}")]
    Evaluation { index: usize, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            message: msg.into(),
            residual,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
