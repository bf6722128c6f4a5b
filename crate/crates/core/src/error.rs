use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("variable count {0} outside supported range [1, 24]")]
    VariableCount(usize),

    #[error("table length {got} does not match 2^{n}")]
    TableLength { n: usize, got: usize },

    #[error("level {k} out of range [0, {n}]")]
    LevelOutOfRange { k: usize, n: usize },

    #[error("variable counts differ: {0} vs {1}")]
    MismatchedArity(usize, usize),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid path of length {len} into a tree of depth {depth}")]
    InvalidPath { len: usize, depth: usize },

    #[error("set family member {mask:#x} is not a subset of {{1..{d}}}")]
    FamilyOutOfRange { mask: u64, d: usize },

    #[error("families overlap; expected disjoint inputs")]
    OverlappingFamilies,

    #[error("enumeration of {0} items exceeds the guard of {1}")]
    ExplosionGuard(u128, u128),

    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),

    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),

    #[error("dimension {0} is not a power of two in [2, 4096]")]
    BadDimension(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("query budget exceeded: read {reads} entries with budget {budget}")]
    QueryBudget { reads: usize, budget: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
