use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// The argument of a retraction inverse left the chart on which it is a diffeomorphism.
    #[error("argument outside the retraction chart: {0}")]
    OutOfChart(String),

    /// The implicit solve of a single integrator step did not converge.
    #[error("implicit step {step} failed to converge (residual {residual:e})")]
    StepSolveFailed { step: usize, residual: f64 },

    /// A root finder exhausted its iteration budget.
    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence { best_residual: f64, iterations: usize },

    /// The Newton linear system could not be solved.
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    /// The force map of a fully actuated model cannot be inverted.
    #[error("force map is not invertible: {0}")]
    NotInvertible(String),

    /// The actuation matrix does not have full column rank.
    #[error("actuation rank deficient: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
