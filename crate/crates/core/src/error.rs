use thiserror::Error;

use crate::problem::Finding;

/// Errors raised by the preconditioning pipeline and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("set block at offset {offset} has no closed-form projection under its scaling: {reason}")]
    IncompatibleScaling { offset: usize, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("problem failed validation: {}", summarize(.0))]
    InvalidProblem(Vec<Finding>),

    #[error("problem file: {0}")]
    Format(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn summarize(findings: &[Finding]) -> String {
    findings.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
