use thiserror::Error;

/// Errors raised by the combinatorial, algebraic and analytic routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("enumeration of {what} would produce {count} items, above the cap of {cap}")]
    Capacity { what: &'static str, count: u128, cap: u128 },
    #[error("invalid Dyck path: {0}")]
    InvalidPath(String),
    #[error("invalid pair partition: {0}")]
    InvalidPairing(String),
    #[error("invalid link pattern: {0}")]
    InvalidPattern(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("no {expected} at position {index}")]
    WrongShape { index: usize, expected: &'static str },
    #[error("link pattern is not planar")]
    NotPlanar,
    #[error("unsupported valence vector {0:?}")]
    UnsupportedValence(Vec<u32>),
    #[error("coincident points x_{0} and x_{1}")]
    CoincidentPoints(u32, u32),
    #[error("negative base under a half-integer power for pair ({0},{1})")]
    NegativeBase(u32, u32),
    #[error("missing coordinate for label {0}")]
    MissingLabel(u32),
    #[error("fusion diverges: order {order_doubled}/2 below the requested order has a nonzero coefficient")]
    Divergent { order_doubled: i32 },
    #[error("series order {0} exceeds the truncation cap")]
    OrderCap(i32),
    #[error("fusion of ({0},{1}) is not allowed: {2}")]
    BadFusion(u32, u32, String),
    #[error("points must be strictly increasing")]
    Unordered,
    #[error("exact elimination failed: {0}")]
    Elimination(String),
    #[error("numerical routine failed: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
