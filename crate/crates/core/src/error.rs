use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("matrix is not symmetric positive-definite")]
    NotPositiveDefinite,

    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("invalid interval for coordinate {index}: ({lower}, {upper})")]
    InvalidInterval {
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("piece {index} is not strictly convex: derivative fails to increase near t = {at}")]
    NonConvexPiece { index: usize, at: f64 },

    #[error("point outside domain: {0}")]
    OutsideDomain(String),

    #[error("coordinate {index} = {value:e} of the second argument is on the simplex boundary")]
    BoundaryArgument { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("gradient undefined at coordinate {index} (value {value:e})")]
    GradientUndefined { index: usize, value: f64 },

    #[error("conjugate gradient inversion failed for coordinate {index} (target {target:e})")]
    ConjugateFailure { index: usize, target: f64 },

    #[error("invalid weight {value} at index {index}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("duplicate group key {0:?}")]
    DuplicateGroup(String),

    #[error("ensemble enumeration needs {atoms} atoms, cap is {cap}")]
    CapExceeded { atoms: u128, cap: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("region lies outside the generator domain")]
    RegionOutsideDomain,

    #[error("point is within {margin:e} of the domain boundary")]
    BoundaryProximity { margin: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
