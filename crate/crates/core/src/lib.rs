//! Hypersphere preconditioning for strongly convex quadratic cone programs,
//! and the PIPG primal-dual solver it is designed for.
//!
//! ```
//! use hypersphere::{solve_qcp, cone_layout, ConeKind, PipgConfig, PowerIterationConfig, Qcp, SetBlock,
//!     StructuredSpdMatrix, Termination};
//! use nalgebra::{dmatrix, dvector};
//!
//! // minimize ½(4ξ₁² + ξ₂²) subject to ξ₁ + ξ₂ = 1
//! let qcp = Qcp {
//!     hessian: StructuredSpdMatrix::Diagonal(dvector![4.0, 1.0]),
//!     cost: dvector![0.0, 0.0],
//!     constraints: dmatrix![1.0, 1.0],
//!     rhs: dvector![1.0],
//!     cones: cone_layout(&[(ConeKind::Zero, 1)]),
//!     sets: vec![SetBlock::free(0, 2)],
//! };
//! let cfg = PipgConfig { termination: Termination::FixedPointResidual(1e-10), ..Default::default() };
//! let sol = solve_qcp(&qcp, &PowerIterationConfig::default(), &cfg).unwrap();
//! assert!((sol.xi[0] - 0.2).abs() < 1e-8 && (sol.xi[1] - 0.8).abs() < 1e-8);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cones;
pub mod error;
pub mod linalg;
pub mod pipg;
pub mod precond;
pub mod problem;

pub use cones::{cone_layout, ConeBlock, ConeKind, SetBlock, SetKind};
pub use error::{Error, Result};
pub use linalg::{cholesky, CholeskyFactor, PowerIterationConfig, SpectralEstimates, StructuredSpdMatrix};
pub use pipg::{
    iterate, optimal_omega, solve, solve_from, solve_qcp, step_sizes, PipgConfig, PipgProblem, PipgState, PlainProblem,
    QcpSolution, SolveReport, StopReason, Termination,
};
pub use precond::{
    block_row_normalize, choose_lambda, hypersphere_step, precondition, recover_solution, ruiz_equilibrate,
    PreconditionedQcp, RuizConfig, RuizResult, TransformRecord,
};
pub use problem::{ensure_valid, read_problem, validate, write_problem, Finding, KktResiduals, Qcp};

/// The guide's code samples, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/problem.md")]
    pub struct Problem;
    #[doc = include_str!("../../../book/src/change-of-variables.md")]
    pub struct ChangeOfVariables;
    #[doc = include_str!("../../../book/src/row-normalization.md")]
    pub struct RowNormalization;
    #[doc = include_str!("../../../book/src/objective-scaling.md")]
    pub struct ObjectiveScaling;
    #[doc = include_str!("../../../book/src/spectral-estimates.md")]
    pub struct SpectralEstimates;
    #[doc = include_str!("../../../book/src/pipg.md")]
    pub struct Pipg;
}
