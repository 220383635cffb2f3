//! Error type shared across the solver crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors that can occur while building problems or running solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A vector component is NaN or infinite.
    #[error("non-finite component at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    /// A vector must have at least one component.
    #[error("vectors must have dimension >= 1")]
    EmptyVector,

    /// Operator evaluation left the representable range.
    #[error("operator evaluation overflowed in {family} at coordinate {coordinate} (input {input})")]
    EvalOverflow {
        family: &'static str,
        coordinate: usize,
        input: f64,
    },

    /// An operator or schedule parameter violates its constraints.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Schedules are defined for t >= 0 only.
    #[error("negative time: {0}")]
    NegativeTime(f64),

    /// Adaptive stepping shrank the step below the representable floor.
    #[error("step size underflow at t = {t} (dt = {dt})")]
    StepUnderflow { t: f64, dt: f64 },

    /// Delayed-integral grid cannot resolve the requested delay.
    #[error("grid step {dt} does not resolve delay 1/{n} (need dt <= 1/(2n))")]
    GridDelayIncompatible { dt: f64, n: u32 },

    /// Two runs or trajectories that must share a problem do not.
    #[error("mismatched runs: {0}")]
    MismatchedRuns(String),

    /// Experiment configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Artifact I/O failed.
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
