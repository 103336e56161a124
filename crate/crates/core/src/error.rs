use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode set: {0}")]
    InvalidModeSet(String),
    #[error("invalid state parameter: {0}")]
    InvalidState(String),
    #[error("mode index {index} out of range for {len} modes")]
    ModeIndex { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("operator is not a linear combination of mode quadratures: {0}")]
    NonQuadratic(String),
    #[error("moment order p + q = {0} exceeds the implemented table (max 4)")]
    MomentOrder(u32),
    #[error("unsupported smearing: {0}")]
    UnsupportedSmearing(String),
    #[error("invalid switching function: {0}")]
    InvalidSwitching(String),
    #[error("invalid pulse schedule: {0}")]
    InvalidSchedule(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),
    #[error("inconsistent characteristic-function value: |chi| = {0} > 1")]
    ChiOutOfRange(f64),
    #[error("rotation angle carries no information (sin theta = {0})")]
    NoInformation(f64),
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("target error must be positive, got {0}")]
    NonPositiveTarget(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("not a valid half-space: {0}")]
    NotHalfSpace(String),
    #[error("characteristic function has not decayed at the grid boundary (max |chi| = {max_boundary:.3e} > {threshold:.1e}); extend the grid to avoid aliasing")]
    BoundaryDecay { max_boundary: f64, threshold: f64 },
    #[error("finite-difference stencil leaves the sampled region: {0}")]
    StencilOutOfGrid(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("Fock truncation too small: {0}")]
    TruncationLeak(String),
    #[error("operator is not a displacement within tolerance (residual {0:.3e})")]
    NotDisplacement(f64),
    #[error("invalid BEC parameters: {0}")]
    InvalidBec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
