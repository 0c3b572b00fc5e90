use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid ellipsoid: {0}")]
    InvalidEllipsoid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gamma function has a pole at {0}")]
    GammaPole(f64),

    #[error("dual order {order} is not supported in dimension {dim}")]
    UnsupportedOrder { order: f64, dim: usize },

    #[error("{0} is not supported")]
    Unsupported(String),

    #[error("integrand returned a non-finite value at u = {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error(
        "quadrature did not converge after {evaluations} evaluations \
         (best estimate {value}, error estimate {abs_error})"
    )]
    QuadratureNonConvergence {
        value: f64,
        abs_error: f64,
        evaluations: usize,
    },

    #[error("targets are infeasible: best relative residual {residual:e}")]
    Infeasible { residual: f64 },

    #[error("targets are ambiguous: best relative residual {residual:e} is in the gray zone")]
    Ambiguous { residual: f64 },
}
