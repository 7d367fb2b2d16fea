use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid count: {0}")]
    InvalidCount(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("kernel is not symmetric (max asymmetry {0:e})")]
    AsymmetricKernel(f64),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("rank {requested} exceeds retained rank {available}")]
    RankTooLarge { requested: usize, available: usize },
    #[error("invalid mesh width {0}")]
    InvalidMesh(f64),
    #[error("unknown curve label {label} (decomposition has {available} curves)")]
    UnknownCurveLabel { label: usize, available: usize },
    #[error("incomplete partition: {0}")]
    IncompletePartition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 2 for configuration or input errors, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotSymmetric(_) | Error::NoConvergence { .. } | Error::NonFinite(_) => 3,
            _ => 2,
        }
    }
}
