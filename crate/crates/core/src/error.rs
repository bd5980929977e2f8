use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical kernels and the run drivers built on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("exp(-u^2) is not representable for u = {0}")]
    Overflow(Complex64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("free Laplace kernel is singular at z = 0")]
    SingularKernel,

    #[error("resolvent system is singular (|det| = {0:e})")]
    SingularSystem(f64),

    #[error("Nyquist bound violated: max|tau| * dy = {product:.4} >= pi")]
    Aliasing { product: f64 },

    #[error("detection efficiency {0} exceeds 1 beyond tolerance")]
    EfficiencyExceedsUnity(f64),

    #[error("survival probability saturated (1 - P = {value:e} at tau = {tau})")]
    Saturated { tau: f64, value: f64 },

    #[error("bracket [{lo}, {hi}] does not enclose an interior maximum")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("degenerate normalization: P(inf) = {0:e}")]
    DegenerateNormalization(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("simulation domain violated: {0}")]
    DomainEscape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
