use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Hermitian symmetry violated at mode {n}: relative asymmetry {rel:.3e}")]
    SymmetryViolation { n: i64, rel: f64 },
    #[error("an n = 0 slot was supplied; the zero mode is structurally absent")]
    ZeroModePresent,
    #[error("truncation mismatch: expected {expected}, got {got}")]
    TruncationMismatch { expected: usize, got: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unsupported Lebesgue exponent {0}")]
    UnsupportedExponent(u32),
    #[error("frequency must be nonzero")]
    ZeroFrequency,
    #[error("phase mismatch: {0}")]
    PhaseMismatch(String),
    #[error("dyadic block {0} is empty")]
    EmptyBlock(usize),
    #[error("source norm vanishes")]
    DivisionByZeroNorm,
    #[error("blow-up detected at t = {t}: norm {norm:.3e}")]
    BlowupDetected { t: f64, norm: f64 },
    #[error("time step {dt} exceeds the stability limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("no contraction: ratios {ratios:?} at iteration {iter}")]
    NoContraction { iter: usize, ratios: Vec<f64> },
    #[error("iteration limit {iters} reached with difference {last:.3e}")]
    MaxIterExceeded { iters: usize, last: f64 },
    #[error("decomposition failed: {0}")]
    DecompositionFailed(String),
    #[error("scan region is empty: {0}")]
    EmptyRegion(String),
    #[error("data norm {norm:.3e} exceeds the smallness threshold {delta:.3e}")]
    SmallnessViolated { norm: f64, delta: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
