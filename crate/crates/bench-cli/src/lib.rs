//! Benchmark harness for the hypersphere preconditioner: an optimal-control
//! problem generator, a reference QP oracle, the γ sweep over
//! `{none, ruiz, hypersphere}` and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod generator;
pub mod reference;
pub mod report;
pub mod sweep;

pub use error::{BenchError, Result};
pub use generator::{generate, GeneratorConfig};
pub use reference::{reference_solve, ReferenceSolution, REFERENCE_TOLERANCE};
pub use report::{emit_csv, parse_csv_file, read_csv, to_csv_string, write_csv};
pub use sweep::{
    default_gammas, run_cell, run_sweep, CellFailure, CellRun, Preconditioner, SweepConfig, SweepOutput, SweepResult,
};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/benchmarks.md")]
pub struct BenchmarksChapter;
