use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("channel vector needs at least 2 entries, got {0}")]
    TooFewChannels(usize),

    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("variance {0:e} is at or below the degeneracy threshold")]
    DegenerateVariance(f64),

    #[error("channel index {index} out of range for {len} channels")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target y = {y} at x = {x} is not attainable (bound {bound})")]
    TargetOutOfRange { x: f64, y: f64, bound: f64 },

    #[error("no interior minimum found while bracketing {0}")]
    BracketFailure(String),

    #[error("scenario has no outlier frames (s_max = 0)")]
    EmptyOutliers,
}

pub type Result<T> = std::result::Result<T, Error>;
