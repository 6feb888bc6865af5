//! Crate-wide error type.

use std::fmt;

/// Errors surfaced by instance validation, the numeric kernel, samplers and
/// the brute-force oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An experiment index is outside `[0, n)`.
    InvalidIndex { index: usize, n: usize },
    /// A set-mode operation received a multiset, or schemes were mixed across modes.
    ModeViolation(String),
    /// A vector or weight list has the wrong length.
    DimensionError { expected: usize, got: usize },
    /// The (weighted) information matrix is singular where it must not be.
    SingularGram,
    /// Elementary-symmetric order `r` outside `0..=t`.
    InvalidOrder { order: usize, len: usize },
    /// Interpolation nodes are not pairwise distinct.
    DegenerateNodes,
    /// The instance's vectors do not span the full ambient dimension.
    InfeasibleRank,
    /// A weight times the expansion factor `q` is not integral.
    NotRationalized { index: usize, value: f64 },
    /// Conditioning event has probability zero.
    UnreachableCondition,
    /// An enumeration would exceed the oracle state cap.
    TooLarge { states: u128, cap: u128 },
    /// Parameters violate a documented precondition.
    InvalidParams(String),
    /// Malformed instance data (shape, finiteness, or field mismatch).
    BadInstance(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidIndex { index, n } => {
                write!(f, "experiment index {index} out of range for n={n}")
            }
            Error::ModeViolation(msg) => write!(f, "mode violation: {msg}"),
            Error::DimensionError { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::SingularGram => write!(f, "singular information matrix"),
            Error::InvalidOrder { order, len } => {
                write!(f, "symmetric-function order {order} out of range for {len} weights")
            }
            Error::DegenerateNodes => write!(f, "interpolation nodes are not distinct"),
            Error::InfeasibleRank => {
                write!(f, "experiment vectors do not have full column rank")
            }
            Error::NotRationalized { index, value } => {
                write!(f, "weight {value} at index {index} is not integral after expansion")
            }
            Error::UnreachableCondition => write!(f, "conditioning event has probability zero"),
            Error::TooLarge { states, cap } => {
                write!(f, "enumeration of {states} states exceeds cap {cap}")
            }
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::BadInstance(msg) => write!(f, "bad instance: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
