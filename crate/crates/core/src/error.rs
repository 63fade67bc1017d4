use thiserror::Error;

/// Errors produced by the design, analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("integer overflow in exact rational arithmetic")]
    Overflow,
    #[error("operation is undefined for the infinite rational")]
    InfiniteOperand,
    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),
    #[error("Farey order must be at least 1, got {0}")]
    InvalidOrder(u32),
    #[error("mediant requires finite nonnegative a < b, got {a} and {b}")]
    Ordering { a: String, b: String },
    #[error("PAM order p must be in 1..={max}, got {p}")]
    InvalidPam { p: u32, max: u32 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("symbol level {level} is outside the 2^{p}-PAM constellation")]
    OutOfConstellation { level: u32, p: u32 },
    #[error("enumeration too large: p*L = {0} exceeds 16")]
    EnumerationTooLarge(u32),
    #[error("space code entries must be finite and nonnegative")]
    NegativeEntry,
    #[error("space code matrix is empty or ragged")]
    MalformedMatrix,
    #[error("space code matrix is all zeros")]
    ZeroMatrix,
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("error vector must be unipolar without zero entries")]
    AssumptionViolated,
    #[error("error vector has a zero entry")]
    ZeroEntry,
    #[error("SNR too low for the asymptotic bounds: rho = {0} must exceed e^2")]
    SnrTooLow(f64),
    #[error("tensor quadrature supports at most 4 dimensions, got {0}")]
    DimensionTooLarge(usize),
    #[error("quadrature needs at least 10 nodes per dimension, got {0}")]
    TooFewNodes(usize),
    #[error("grid resolution must be in (0, 0.005], got {0}")]
    InvalidResolution(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("target BER {target} is not bracketed by converged points of the {curve} curve")]
    TargetNotBracketed { target: f64, curve: String },
    #[error("malformed CSV: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
