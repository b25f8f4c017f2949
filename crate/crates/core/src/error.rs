use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("line {line}: endpoint {node} out of range for a graph with {n} nodes")]
    EndpointOutOfRange { line: usize, node: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("node {0} has an empty attention support (isolated node)")]
    IsolatedNode(usize),

    #[error(
        "graph is not connected ({components} strongly connected components); the invariant measure is not unique"
    )]
    Disconnected { components: usize },

    #[error("killing rate vector must be <= 0 everywhere, found c({node}) = {value}")]
    PositiveKillingRate { node: usize, value: f64 },

    #[error("breaking term does not break ergodicity: |C 1|_inf = {norm:e} (constants stay in the kernel)")]
    ErgodicityNotBroken { norm: f64 },

    #[error("graph lacks a self-loop at node {0}")]
    MissingSelfLoop(usize),

    #[error("matrix exponential overflowed (t * |Q| = {scaled_norm:e}); rescale time or shorten the horizon")]
    Overflow { scaled_norm: f64 },

    #[error("adaptive step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error(
        "integration needs {needed:e} steps, above the budget of {limit}; use the expm route or a shorter horizon"
    )]
    StepBudgetExceeded { needed: f64, limit: usize },

    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },

    #[error("trajectory has already converged: every deviation is below {floor:e}")]
    AlreadyConverged { floor: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("empty sample: n_samples must be positive")]
    EmptySample,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::StepSizeUnderflow { .. }
                | Error::StepBudgetExceeded { .. }
                | Error::NonFinite { .. }
                | Error::Eigen(_)
                | Error::Invariant(_)
                | Error::AlreadyConverged { .. }
        )
    }
}
