//! The hypersphere preconditioner and the Ruiz equilibration baseline.
//!
//! [`precondition`] runs three steps in order:
//!
//! 1. [`hypersphere_step`]: factor `P = RᵀR` and substitute `z = Rξ`, so the
//!    objective's level sets become spheres;
//! 2. [`block_row_normalize`]: scale constraint rows by a positive diagonal
//!    `E` that keeps every cone block intact;
//! 3. [`choose_lambda`]: scale the objective by `λ* = √(σ_min(HHᵀ)/2)`.
//!
//! The output is the problem
//!
//! ```text
//! minimize    (λ/2) zᵀz + λ qᵀz
//! subject to  H z − h ∈ K,   z ∈ D
//! ```
//!
//! and a [`TransformRecord`] for mapping solutions back.

mod ruiz;
mod steps;

use nalgebra::{DMatrix, DVector};

pub use ruiz::{ruiz_equilibrate, RuizConfig, RuizResult};
pub use steps::{block_row_normalize, choose_lambda, hypersphere_step, scaled_set, HypersphereStep, RowNormalization};

use crate::cones::{ConeBlock, SetBlock};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{CholeskyFactor, PowerIterationConfig, SpectralEstimates};
use crate::problem::{kkt_condition_number, Qcp};

#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionedQcp {
    pub lambda: f64,
    pub q: DVector<f64>,
    /// `H` (m × n).
    pub constraints: DMatrix<f64>,
    /// `h`.
    pub rhs: DVector<f64>,
    pub cones: Vec<ConeBlock>,
    pub sets: Vec<SetBlock>,
    pub estimates: SpectralEstimates,
}

impl PreconditionedQcp {
    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    /// The same problem under another objective scale. The minimizer does not
    /// move; the dual solution scales with `λ`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self { lambda, ..self.clone() })
    }

    /// KKT condition number at the current `λ`, from the spectral estimates.
    pub fn kappa(&self) -> Result<f64> {
        kkt_condition_number(self.lambda, self.estimates.sigma_min, self.estimates.sigma_max)
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        self.lambda * (0.5 * z.dot(z) + self.q.dot(z))
    }
}

/// What is needed to map a solution of the preconditioned problem back.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformRecord {
    pub factor: CholeskyFactor,
    pub e_diag: DVector<f64>,
    pub lambda: f64,
}

impl TransformRecord {
    /// `z = Rξ`.
    pub fn to_scaled_primal(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        self.factor.mul_vec(xi)
    }

    /// `η = λ E⁻¹ μ`.
    pub fn to_scaled_dual(&self, mu: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("dual vector", self.e_diag.len(), mu.len())?;
        Ok(mu.component_div(&self.e_diag) * self.lambda)
    }
}

pub fn precondition(qcp: &Qcp, cfg: &PowerIterationConfig) -> Result<(PreconditionedQcp, TransformRecord)> {
    let step = hypersphere_step(qcp)?;
    let rows = block_row_normalize(&step.constraints, &step.rhs, &qcp.cones);
    let (lambda, estimates) = choose_lambda(&rows.constraints, cfg)?;
    Ok((
        PreconditionedQcp {
            lambda,
            q: step.q,
            constraints: rows.constraints,
            rhs: rows.rhs,
            cones: qcp.cones.clone(),
            sets: step.sets,
            estimates,
        },
        TransformRecord {
            factor: step.factor,
            e_diag: rows.e_diag,
            lambda,
        },
    ))
}

/// Maps `(z, η)` back to the original problem: `ξ = R⁻¹z` and `μ = Eη/λ`.
///
/// The dual map follows from the stationarity conditions. Multiplying
/// `λ(z + q) + Hᵀη ∈ −N_D(z)` by `Rᵀ/λ` gives
/// `Pξ + p + Gᵀ(Eη/λ) ∈ −N_E(ξ)`, and `Eη/λ` lies in `L°` because `η ∈ K°`.
pub fn recover_solution(
    t: &TransformRecord,
    z: &DVector<f64>,
    eta: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_dim("primal vector", t.factor.dim(), z.len())?;
    check_dim("dual vector", t.e_diag.len(), eta.len())?;
    let xi = t.factor.solve_upper(z)?;
    let mu = eta.component_mul(&t.e_diag) / t.lambda;
    Ok((xi, mu))
}
