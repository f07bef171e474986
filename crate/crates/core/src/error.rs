//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by basis construction, data loading, fitting, and model I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value lies outside the domain the operation is defined on
    /// (e.g. a covariate outside [0,1] where no extrapolation is allowed).
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// A data file could not be ingested; the message names the offending location.
    #[error("failed to load {path}: {reason}")]
    Load { path: String, reason: String },

    /// A model file is malformed or has an unsupported schema version.
    #[error("model file error: {0}")]
    Model(String),

    /// An exact enumeration would exceed the configured budget.
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
