use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A logarithm was requested outside the scaled unit ball around the identity.
    #[error("out of log chart: scaled distance {distance:.6e} >= 1 (shrink the base or the perturbation)")]
    OutOfChart { distance: f64 },

    /// A logarithm inside an averaging step left the chart.
    #[error("averaging step left the log chart at {at}: scaled distance {distance:.6e} >= 1")]
    StepOutOfChart { distance: f64, at: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An action or twist pushed a point outside the declared safety box.
    #[error("point leaves the safety box: |x|_inf = {norm:.6e} > {limit:.6e}")]
    OutsideSafetyBox { norm: f64, limit: f64 },

    #[error("saturation radius {radius:.6e} exceeds base radius {limit:.6e}")]
    SaturationExceedsBase { radius: f64, limit: f64 },

    #[error("defect >= 1, averaging preconditions violated ({0})")]
    DefectTooLarge(String),

    #[error("nonpositive density {value:.6e} (finite differences too coarse?)")]
    NonPositiveDensity { value: f64 },

    #[error("Newton iteration failed to converge after {iterations} steps (residual {residual:.3e})")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("ill-conditioned representation matrix (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
