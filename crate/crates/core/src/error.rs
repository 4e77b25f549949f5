use thiserror::Error;

/// Failure modes of the solvers. Numerical payloads are stored as `f64`
/// regardless of the scalar type the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("grid too coarse: {n} nodes, need at least {min}")]
    GridTooCoarse { n: usize, min: usize },

    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shooting solution blew up at y = {y} (v = {value})")]
    BlowUp { y: f64, value: f64 },

    #[error("step size underflow at y = {y} (step {step:e})")]
    StepUnderflow { y: f64, step: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("shooting requires beta = 0, got beta = {0}")]
    BetaNonzero(f64),

    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),

    #[error("singular Poisson solve")]
    SingularPoissonSolve,

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("continuation stalled at {reached} before reaching {target}")]
    ContinuationStalled { reached: f64, target: f64 },

    #[error("seed is degenerate (|dzf| below threshold); continuation needs a nondegenerate state")]
    DegenerateSeed,

    #[error("derivative order {order} needs more than {n} grid nodes")]
    OrderTooHigh { order: usize, n: usize },

    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
