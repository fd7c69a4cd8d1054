use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state has {found} sites but the model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("step size underflow: dt = {dt:e} fell below the minimum {min:e}")]
    StepUnderflow { dt: f64, min: f64 },

    #[error("trace drift {drift:e} exceeds the instability bound {bound:e}")]
    TraceDrift { drift: f64, bound: f64 },

    #[error("energy {energy} lies outside the band (-{edge}, {edge})")]
    OutOfSupport { energy: f64, edge: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("{0} is undefined for these parameters")]
    Undefined(&'static str),

    #[error("fit window [{lo}, {hi}] holds {found} points, at least {needed} required")]
    InsufficientPoints { lo: f64, hi: f64, needed: usize, found: usize },

    #[error("non-positive value {value:e} at t = {t} in a logarithmic fit")]
    NonPositive { t: f64, value: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
