use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("input is not normalized (total mass = {0})")]
    NotNormalized(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("level set {level} of the conditioning variable carries zero mass")]
    DegenerateConditioning { level: f64 },

    #[error("generator rejected: {0}")]
    InvalidGenerator(String),

    #[error("boundary value undefined: {0}")]
    UndefinedBoundary(String),

    #[error("point outside the chart domain: {0}")]
    ChartDomain(String),

    #[error("optimization problem is unbounded")]
    Unbounded,

    #[error("finite-difference stencil produced a non-finite value at {0}")]
    StencilFailure(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("state is not faithful (min eigenvalue {0:e})")]
    NotFaithful(f64),

    #[error("constraints are infeasible: {0}")]
    Infeasible(String),

    #[error("optimum leaves the prior support: {0}")]
    PriorSupport(String),

    #[error("infimum is infinite: {0}")]
    InfiniteInfimum(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },

    #[error("malformed matrix payload: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Strips any per-step wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}
