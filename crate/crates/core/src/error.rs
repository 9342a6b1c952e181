use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sum specification: {0}")]
    InvalidSpec(String),
    #[error("x = {x} exceeds the oracle limit {limit}")]
    OracleLimit { x: u64, limit: u64 },
    #[error("table limit {0} is below the minimum of 30")]
    TableTooSmall(u64),
    #[error("table of limit {limit} needs {needed} bytes, over the budget of {budget}")]
    MemoryBudget { limit: u64, needed: u64, budget: u64 },
    #[error("table mode {mode:?} cannot serve {spec}")]
    UnsupportedPairing { mode: crate::table::TableMode, spec: String },
    #[error("work unit [{a}, {b}] is empty or malformed")]
    BadInterval { a: u64, b: u64 },
    #[error("results do not tile [1, X]: {0}")]
    Tiling(String),
    #[error("results disagree on the spec set")]
    SpecMismatch,
    #[error("pole of zeta at s = 1")]
    Pole,
    #[error("argument outside the supported domain: {0}")]
    Domain(String),
    #[error("|zeta'(rho)| = {0:e} is too small; the ordinate is probably not a zero")]
    DegenerateZero(f64),
    #[error("zeros file: {0}")]
    ZerosFormat(String),
    #[error("need {needed} zeros but only {available} are available")]
    InsufficientZeros { needed: usize, available: usize },
    #[error("ordinate {gamma} lies above the truncation height {t}")]
    OrdinateAboveT { gamma: f64, t: f64 },
    #[error("series have no overlapping range")]
    EmptyOverlap,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("table file {path}: {msg}")]
    TableFile { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
