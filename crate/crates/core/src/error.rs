use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 8")]
    GridSize(usize),

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operands live on different phase-space grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("generic star product on an n = {n} grid exceeds the cost guard (n <= {limit}); pass an override to force it")]
    CostGuard { n: usize, limit: usize },

    #[error("star square root input has a value {value} below the admissible floor {floor}")]
    NegativeInput { value: f64, floor: f64 },

    #[error("star square root did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("wave packet tail {tail:e} at the grid boundary exceeds the tolerance {tolerance:e}")]
    TailsExceedBoundary { tail: f64, tolerance: f64 },

    #[error("time step {dt} exceeds the stability bound {max_dt}")]
    StabilityBound { dt: f64, max_dt: f64 },

    #[error("exact mixed propagation needs a q-independent Hamiltonian symbol")]
    HamiltonianNotMomentumOnly,

    #[error("trajectory would hold {bytes} bytes of snapshots, above the {cap} byte cap")]
    MemoryCap { bytes: usize, cap: usize },

    #[error("two-point kernel drops to {ratio:e} of its maximum inside the window; shrink the window")]
    NearZeroKernel { ratio: f64 },

    #[error("window touches the singular set E(p1) = E(p2) of the odd condition")]
    SingularWindow,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
