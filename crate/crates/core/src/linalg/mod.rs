//! Structured Cholesky factors, triangular solves and spectral estimation.

mod spectral;
mod structured;

pub use spectral::{
    estimate_spectrum, power_iteration, shifted_power_iteration, InitialVector, LinearOperator, PowerEstimate,
    PowerIterationConfig, SpectralEstimates, DEFAULT_SEED, DEGENERATE_SHIFT,
};
pub use structured::{cholesky, CholeskyFactor, StructuredSpdMatrix, PIVOT_TOLERANCE};
