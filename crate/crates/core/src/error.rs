use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max |A - A^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("subsystem index {index} invalid for a layout with {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("total dimension {dim} exceeds the cap of {cap}")]
    DimensionOverflow { dim: usize, cap: usize },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("{field} must be {constraint}")]
    InvalidParameter { field: String, constraint: String },
    #[error("step size underflow at t = {t} ns (h = {h:.3e} ns)")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("integration stalled: {steps} steps exceeded before t = {t} ns")]
    ToleranceNotMet { t: f64, steps: usize },
    #[error("series too short: {len} samples, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("no spectral bins at or above {fmin} GHz")]
    EmptyBand { fmin: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}
