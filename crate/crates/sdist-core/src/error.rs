//! Crate-wide error type.

use alloc::string::String;
use alloc::vec::Vec;

/// Errors reported by the metric learning pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive semi-definite ({0})")]
    NotPositiveSemiDefinite(String),

    #[error("no convergence after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        /// Last iterate, for diagnostics.
        last: Vec<f64>,
        value: f64,
    },

    #[error("shift escalation exceeded {max_shift}: input is ill-conditioned")]
    IllConditioned { max_shift: f64 },

    #[error("sample {sample} has no eligible {class} neighbors")]
    EmptyNeighborhood { sample: usize, class: &'static str },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("step {step} out of range (model has {available})")]
    StepOutOfRange { step: usize, available: usize },

    #[error("feature map is not an extension of the old map")]
    NotAnExtension,

    #[error("neighborhoods changed since the info matrix was built")]
    NeighborhoodsChanged,
}

pub type Result<T> = core::result::Result<T, Error>;
