//! Error types shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A dimension argument is out of the supported range.
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    /// An operator that must be Hermitian is not, beyond tolerance.
    #[error("matrix is not Hermitian (relative deviation {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },

    /// Two dressed states claim the same bare state, or a dressed state
    /// overlaps two bare states equally well. Physically this marks a
    /// (multi-photon) resonance condition; it is reported, never guessed
    /// through.
    #[error(
        "degenerate assignment for dressed state {dressed}: bare states {first} and {second} \
         contested (overlap gap {gap:.3e})"
    )]
    DegenerateAssignment {
        dressed: usize,
        first: usize,
        second: usize,
        gap: f64,
    },

    /// Invalid or inconsistent configuration values.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An iterative solver failed to converge.
    #[error("solver failed: {context} (residual {residual:.3e})")]
    Convergence { context: String, residual: f64 },

    /// A quantity was requested outside its domain of definition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A time step is too coarse for the fastest retained frequency.
    #[error("time step {dt} ns too large for fastest retained frequency {f_max} GHz")]
    StepTooLarge { dt: f64, f_max: f64 },

    /// Not enough input data for the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Inputs that must share device parameters do not.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
