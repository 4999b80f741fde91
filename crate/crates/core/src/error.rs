use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported dimension `{0}` (expected time, length, velocity or coupling)")]
    UnsupportedDimension(String),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("faddeeva function overflows at z = {z}")]
    Overflow { z: Complex64 },

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("laplace inversion failed at contour node {index} (s = {node})")]
    ContourNode { index: usize, node: Complex64 },

    #[error("matrix exponential failed: norm {norm:.3e} after {squarings} squarings")]
    ExponentialNotConverged { norm: f64, squarings: u32 },

    #[error("step size underflow at t = {t} (h = {step:.3e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("trace defect {defect:.3e} at t = {t}")]
    TraceDefect { t: f64, defect: f64 },

    #[error("state exhausted at t = {t}: survival {survival:.3e}")]
    StateExhausted { t: f64, survival: f64 },

    #[error("position {position} is not a grid node")]
    OffGrid { position: f64 },

    #[error("cumulative distribution is not monotone at index {index}")]
    NonMonotone { index: usize },

    #[error("rate majorant too small: rate {rate:.6e} exceeds majorant {majorant:.6e} at t = {t}")]
    MajorantViolated { t: f64, rate: f64, majorant: f64 },

    #[error("bracket invalid: no interior maximum in [{lo}, {hi}]")]
    BracketInvalid { lo: f64, hi: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
