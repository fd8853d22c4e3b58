//! Error type shared by every module of the crate.

use num_rational::BigRational;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid base {0}: must be at least 2")]
    InvalidBase(u64),
    #[error("bases {0} and {1} are not coprime")]
    NonCoprimeBases(u64, u64),
    #[error("frequency vector is all zero")]
    ZeroFrequency,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("partition is empty")]
    EmptyPartition,
    #[error("breakpoints not strictly increasing or last != 1 (at index {0})")]
    Unsorted(usize),
    #[error("{n} points exceed the exact-enumeration cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("exact star discrepancy is not supported in dimension {0}")]
    UnsupportedDim(usize),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("budget exceeded: {needed} exceeds cap {cap}")]
    BudgetExceeded { needed: u128, cap: u128 },
    #[error("degenerate rule: {0}")]
    DegenerateRule(String),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("probabilities sum to 1 - ({deficit})")]
    SumNotOne { deficit: BigRational },
    #[error("probabilities are irrationally related at this precision")]
    IrrationallyRelated,
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("Newton iteration failed in boxes {0:?}")]
    NoConvergence(Vec<i64>),
    #[error("maps have unequal ratios; use the Khodak construction")]
    UnequalRatios,
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("start point is not the fixed point of the first map")]
    StartNotFixed,
    #[error("invalid address: {0}")]
    InvalidAddress(String),
    #[error("depth {depth} too shallow for {n} points")]
    DepthTooShallow { depth: usize, n: usize },
}

impl Error {
    /// True for errors signalling a resource cap rather than invalid input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. } | Error::TooLarge { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
