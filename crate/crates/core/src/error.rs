use std::path::PathBuf;

use num_bigint::BigUint;
use thiserror::Error;

use crate::oracle::LeakageMode;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {index} has value {value}, outside [0, {q})")]
    SymbolOutOfRange { index: usize, value: u32, q: u32 },

    #[error("{attack} requires leakage mode {required}, oracle runs {actual}")]
    WrongMode {
        attack: &'static str,
        required: LeakageMode,
        actual: LeakageMode,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{what} needs {needed} points, limit is {limit}")]
    Capacity {
        what: &'static str,
        needed: BigUint,
        limit: u64,
    },

    #[error("exact search gave up after {0} work units")]
    BudgetExhausted(u64),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
