use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains non-finite samples ({count} of {total})")]
    NonFinite { count: usize, total: usize },

    #[error("derivative order {0} is not supported (maximum is 4)")]
    UnsupportedOrder(usize),

    #[error("unsupported dimension d = {0} (only 2 and 3 are handled)")]
    UnsupportedDimension(usize),

    #[error("degree k' = {kprime} is not supported for d = {d}")]
    UnsupportedDegree { d: usize, kprime: usize },

    #[error("mode index l = {l} out of range 1..={dim}")]
    ModeIndex { l: usize, dim: usize },

    #[error("field vanishes on the fitting shells; decay exponent undefined")]
    UndefinedExponent,

    #[error("insufficient decay: {0}")]
    InsufficientDecay(String),

    #[error("delta + d/p = {0} is an integer; perturb the weight")]
    IntegerWeight(f64),

    #[error("logarithmic far-field term present (source integral {0:e}); not representable")]
    LogTerm(f64),

    #[error("CFL condition violated: dt = {dt} exceeds {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("not a diffeomorphism: det(dphi) = {det:e} at ({x}, {y})")]
    NotDiffeomorphism { det: f64, x: f64, y: f64 },

    #[error("inversion did not converge: residual {residual:e} after {iterations} iterations")]
    InversionFailed { residual: f64, iterations: usize },

    #[error("ill-conditioned fit (condition number {0:e})")]
    IllConditioned(f64),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
