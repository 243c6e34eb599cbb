//! Error types shared across the library.

use thiserror::Error;

/// Library-wide error type.
///
/// Variants split into two families: input/contract violations
/// ([`Error::is_validation`]) and numerical failures detected at run time.
/// The CLI maps the former to exit code 2 and the latter to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("hopping is not hermitian at offset {offset}: ‖h(-x) - h(x)†‖ = {deviation:.3e}")]
    NonHermitianHopping { offset: i64, deviation: f64 },

    #[error("coefficient at offset {offset} is {rows}x{cols}, expected {bands}x{bands}")]
    BadCoefficientShape {
        offset: i64,
        rows: usize,
        cols: usize,
        bands: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid size {grid} refused: {reason}")]
    GridTooSmall { grid: usize, reason: String },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix is not a projector: ‖P² - P‖_F = {deviation:.3e} (tol {tol:.1e})")]
    NotAProjector { deviation: f64, tol: f64 },

    #[error(
        "more than {max_jumps} discontinuity candidates; the symbol likely violates piecewise continuity"
    )]
    TooManyJumps { max_jumps: usize },

    #[error(
        "eigenvalue {value} outside [{lo}, {hi}]: the symbol behind this section is not a projector"
    )]
    SpectrumOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("eigensolver failed at k = {k}")]
    EigensolverFailure { k: f64 },

    #[error("{0}")]
    Validation(String),
}

impl Error {
    /// True for contract/input violations, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::SpectrumOutOfRange { .. } | Error::EigensolverFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
