use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("slot {slot} out of range for rank-{rank} tensor")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("cannot contract slots {a} and {b}: {reason}")]
    BadContraction { a: usize, b: usize, reason: &'static str },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("expected a rank-{expected} tensor, got rank {got}")]
    WrongRank { expected: usize, got: usize },
    #[error("metric is not symmetric (relative asymmetry {0:.3e})")]
    MetricNotSymmetric(f64),
    #[error("metric is not positive definite")]
    MetricNotPositiveDefinite,
    #[error("point {point:?} is outside the chart domain: {reason}")]
    OutsideDomain { point: Vec<f64>, reason: String },
    #[error("derivative order {requested} exceeds the supported order {supported}")]
    InsufficientOrder { requested: usize, supported: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial velocity is not unit length (|v|_g = {0:.12})")]
    NotUnitVelocity(f64),
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("seed radius {r0:.3e} is too small (minimum {min:.1e})")]
    SeedRadiusTooSmall { r0: f64, min: f64 },
    #[error("frame invariant violated at r = {r:.4}: {what} drift {drift:.3e} > {tol:.1e}")]
    FrameInvariant { r: f64, what: &'static str, drift: f64, tol: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature unresolved near origin: innermost shell carries {share:.1}% of the norm")]
    QuadratureUnresolved { share: f64 },
    #[error("inadmissible Carleman parameter λ = {0}")]
    InadmissibleLambda(f64),
    #[error("solution is off-shell: {what} residual {value:.3e} exceeds {tol:.1e}")]
    OffShell { what: &'static str, value: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
