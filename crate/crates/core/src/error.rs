use thiserror::Error;

use crate::problem::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("time tags differ: {0} vs {1}")]
    TimeMismatch(f64, f64),

    #[error("field has {got} values but its grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("table potential needs at least 3 samples, got {0}")]
    TableTooShort(usize),

    #[error("x = {x} lies outside the table range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("problem failed validation:\n{0}")]
    Validation(ValidationReport),

    #[error("solver became unstable at step {step} (t = {time})")]
    Instability { step: usize, time: f64 },

    #[error("positivity lost at step {step}, node {node}: value {value:e}")]
    Positivity { step: usize, node: usize, value: f64 },

    #[error("density is not positive at node {node} (value {value:e})")]
    NonPositiveDensity { node: usize, value: f64 },

    #[error("trajectory needs at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("snapshot times are not uniformly spaced")]
    NonUniformSpacing,

    #[error("snapshot times must be strictly increasing")]
    NonIncreasingTimes,

    #[error("slope fit requires positive data, got ({x}, {y})")]
    NonPositiveInput { x: f64, y: f64 },

    #[error("sample set is empty")]
    EmptySamples,

    #[error("path {path} became non-finite at step {step}")]
    PathDiverged { path: usize, step: usize },

    #[error("tridiagonal system is singular at row {0}")]
    SingularSystem(usize),

    #[error("solve failed for epsilon = {epsilon}: {source}")]
    AtEpsilon {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors raised while time stepping or sampling, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Instability { .. }
            | Error::Positivity { .. }
            | Error::PathDiverged { .. }
            | Error::SingularSystem(_) => true,
            Error::AtEpsilon { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
