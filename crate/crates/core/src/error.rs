use thiserror::Error;

use crate::solver::ConvergenceTrace;

pub type Result<T> = std::result::Result<T, DiracError>;

#[derive(Debug, Error)]
pub enum DiracError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid potential parameters: {0}")]
    InvalidPotential(String),

    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("shift {shift} coincides with an eigenvalue; perturb the shift")]
    SingularShift { shift: f64 },

    #[error(
        "small-component denominator {denominator:e} is not positive at r = {r}; \
         the lagged energy {energy} fell into the Dirac sea"
    )]
    NonPositiveDenominator {
        r: f64,
        energy: f64,
        denominator: f64,
    },

    #[error("trial state is degenerate (norm {norm:e})")]
    DegenerateTrialState { norm: f64 },

    #[error("trial state lies in the span of the lower states (projected norm {norm:e})")]
    ProjectedToZero { norm: f64 },

    #[error("non-finite {what} at epoch {epoch}")]
    NonFinite { what: &'static str, epoch: usize },

    #[error(
        "variational collapse at epoch {epoch}: energy {energy} dropped below {threshold} \
         (entered the Dirac sea)"
    )]
    Collapse {
        epoch: usize,
        energy: f64,
        threshold: f64,
        trace: Box<ConvergenceTrace>,
    },

    #[error(
        "eigensolver did not converge after {iterations} iterations (last residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("all-zero input")]
    ZeroInput,
}
