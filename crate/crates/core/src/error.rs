//! Error type shared by the pool, tree, search, and forest layers.

use std::fmt;

/// Library result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error for all index operations.
///
/// Every variant is `Copy`; returning an error never allocates, so the error
/// paths obey the same no-allocation discipline as the success paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Error {
    /// A configuration field violates an invariant (zero capacity, zero
    /// dimensions, ...). The payload names the offending field.
    InvalidConfig(&'static str),
    /// Requested pool sizes exceed the hard allocation ceiling.
    CapacityOverflow,
    /// No free slot left; the insert was rejected, the index is unchanged.
    PoolExhausted,
    /// Coordinate count does not match the index dimensionality.
    DimensionMismatch { expected: usize, got: usize },
    /// A coordinate was NaN or infinite.
    NonFiniteCoordinate,
    /// A mutating operation arrived while a rebuild was in progress.
    RebuildInProgress,
    /// No live point with the given coordinates exists.
    NotFound,
    /// The operation needs at least one live point.
    EmptyTree,
    /// Requested neighbor count exceeds the configured `max_k`.
    KExceedsMax { k: usize, max_k: usize },
    /// More points satisfy the query than the result buffer can hold.
    ResultOverflow,
    /// Search radius must be positive and finite.
    InvalidRadius,
    /// The forest has no tree with room left for another point.
    ForestExhausted,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::CapacityOverflow => write!(f, "requested sizes exceed the pool byte ceiling"),
            Error::PoolExhausted => write!(f, "node pool exhausted; insert rejected"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected} coordinates, got {got}")
            }
            Error::NonFiniteCoordinate => write!(f, "coordinates must be finite"),
            Error::RebuildInProgress => write!(f, "index is rebuilding; only reads are allowed"),
            Error::NotFound => write!(f, "point not found"),
            Error::EmptyTree => write!(f, "operation requires a non-empty tree"),
            Error::KExceedsMax { k, max_k } => {
                write!(f, "k = {k} exceeds the configured max_k = {max_k}")
            }
            Error::ResultOverflow => write!(f, "result set exceeds the configured max_k buffer"),
            Error::InvalidRadius => write!(f, "radius must be positive and finite"),
            Error::ForestExhausted => write!(f, "forest capacity exhausted; insert rejected"),
        }
    }
}

impl std::error::Error for Error {}
