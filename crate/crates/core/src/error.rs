use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` must be strictly positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("system is not underdamped: (c/2m)^2 = {sigma_sq} >= k/m = {k_over_m}")]
    NotUnderdamped { sigma_sq: f64, k_over_m: f64 },

    #[error("jump from a state with x2 = 0 needs an explicit SGN branch")]
    MissingBranch,

    #[error("no crossing found within the horizon of {horizon} s")]
    HorizonExceeded { horizon: f64 },

    #[error("crossing times are undefined at the origin")]
    OriginInput,

    #[error("state ({x1}, {x2}) is outside the domain C ∪ D \\ {{0}}")]
    DomainError { x1: f64, x2: f64 },

    #[error("no sign change of the return-speed defect up to v = {v_hi}")]
    BracketNotFound { v_hi: f64 },

    #[error("periodic orbit check `{check}` failed: residual {residual:e} > {tolerance:e}")]
    OrbitCheckFailed {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("initial state ({x1}, {x2}) is not in C ∪ D for the selected reset law")]
    InvalidStart { x1: f64, x2: f64 },

    #[error("invalid reset law: {0}")]
    InvalidResetLaw(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arc format error: {0}")]
    Format(String),
}
