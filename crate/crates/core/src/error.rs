use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("field must be real-valued (max imaginary part {0:.3e})")]
    ComplexInput(f64),

    #[error("field contains non-finite samples")]
    NonFinite,

    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("relaxation collapsed to the zero field")]
    Collapse,

    #[error("shooting bracket not found: {0}")]
    ShootingBracket(String),

    #[error("fit window [{0}, {1}] reaches below round-off")]
    FitWindow(f64, f64),

    #[error("constraint Gram matrix is singular (smallest eigenvalue {0:.3e})")]
    SingularGram(f64),

    #[error("negative Rayleigh quotient {0:.6e} on a constrained subspace")]
    NegativeQuotient(f64),

    #[error("trajectory leaves the simulation window: {0}")]
    OutsideWindow(String),

    #[error("perturbation collapsed the modulation distance to zero")]
    DegeneratePerturbation,

    #[error("series too coarse for finite differencing: {0}")]
    CoarseSeries(String),

    #[error("run flagged non-conservative: {0}")]
    NonConservative(String),

    #[error("cached field does not match the requested parameters: {0}")]
    CacheMismatch(String),

    #[error("field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
