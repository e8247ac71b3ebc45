use thiserror::Error;

/// Errors surfaced by grid, operator and quadrature operations.
#[derive(Debug, Error)]
pub enum MoyalError {
    #[error("deformation parameter must be positive, got theta0 = {0}")]
    DegenerateTheta(f64),

    #[error("truncation size must be at least 2, got {0}")]
    BadTruncation(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("operands carry different deformation data")]
    ThetaMismatch,

    #[error("support overflow: {0}")]
    SupportOverflow(String),

    #[error("Lp exponent must satisfy p >= 1, got {0}")]
    BadExponent(f64),

    #[error("input is not Hermitian: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("axis index must be 1 or 2, got {0}")]
    BadAxis(usize),

    #[error("J_max = {j_max} too large for grid (need 2^(J_max+1) <= sqrt(2) T_max = {limit:.3})")]
    PartitionTooFine { j_max: usize, limit: f64 },

    #[error("coefficient sequence length {got} does not match partition block count {want}")]
    IndexRange { got: usize, want: usize },

    #[error("quadrature tolerance {want:.3e} unreachable at node budget; achieved {achieved:.3e}")]
    QuadratureTolerance { want: f64, achieved: f64 },

    #[error("spectrum [{lo:.3}, {hi:.3}] escapes the function window of radius {window:.3}")]
    SpectrumOutsideWindow { lo: f64, hi: f64, window: f64 },

    #[error("polynomial arity {arity} does not match argument count {got}")]
    ArityMismatch { arity: usize, got: usize },

    #[error("time step underflow: dt fell below {min_dt:.3e} without meeting tolerances")]
    StepUnderflow { min_dt: f64 },

    #[error("numerical blow-up at t = {t:.6}: state norm {norm:.3e}")]
    BlowUp { t: f64, norm: f64 },

    #[error("linear algebra backend error: {0}")]
    Linalg(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Config(String),
}

impl From<ndarray_linalg::error::LinalgError> for MoyalError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        MoyalError::Linalg(e.to_string())
    }
}
