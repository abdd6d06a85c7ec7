use nalgebra::{DMatrix, DVector};

use crate::cones::{ConeBlock, ConeKind, SetBlock, SetKind};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, estimate_spectrum, CholeskyFactor, PowerIterationConfig, SpectralEstimates};
use crate::problem::{ensure_valid, optimal_lambda, Qcp};

/// The image `R·E` of a set block under `z = Rξ`.
///
/// Free blocks map to themselves whatever `R` looks like. Every other block
/// needs `R` to act on its coordinates as a positive diagonal scaling, and
/// balls and second-order cones additionally need that scaling to be uniform.
pub fn scaled_set(set: &SetBlock, factor: &CholeskyFactor) -> Result<SetBlock> {
    if matches!(set.kind, SetKind::Free) {
        return Ok(set.clone());
    }
    let diag = factor
        .decoupled_scales(set.range())
        .ok_or_else(|| Error::IncompatibleScaling {
            offset: set.offset,
            reason: "the Cholesky factor couples these coordinates to others".into(),
        })?;
    let scale = set.scale.iter().zip(diag.iter()).map(|(s, r)| s * r).collect();
    let out = set.clone().with_scale(scale);
    out.check_scaling()?;
    Ok(out)
}

/// Result of the change of variables `z = Rξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersphereStep {
    /// `Ĝ = G R⁻¹`.
    pub constraints: DMatrix<f64>,
    /// `g`, unchanged.
    pub rhs: DVector<f64>,
    /// `q = R⁻ᵀ p`.
    pub q: DVector<f64>,
    /// `R·E`.
    pub sets: Vec<SetBlock>,
    pub factor: CholeskyFactor,
}

/// Turns the objective into `½ zᵀz + qᵀz` (up to the scale `λ` applied later)
/// by factoring `P = RᵀR` and substituting `z = Rξ`.
pub fn hypersphere_step(qcp: &Qcp) -> Result<HypersphereStep> {
    ensure_valid(qcp)?;
    let factor = cholesky(&qcp.hessian)?;
    let constraints = factor.right_solve(&qcp.constraints)?;
    let q = factor.solve_upper_transpose(&qcp.cost)?;
    let sets = qcp
        .sets
        .iter()
        .map(|s| scaled_set(s, &factor))
        .collect::<Result<Vec<_>>>()?;
    Ok(HypersphereStep {
        constraints,
        rhs: qcp.rhs.clone(),
        q,
        sets,
        factor,
    })
}

/// `[H h] = E [Ĝ g]` for a positive diagonal `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowNormalization {
    pub constraints: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub e_diag: DVector<f64>,
}

/// Scales zero-cone and nonnegative rows to unit norm one at a time, and
/// each second-order cone block by the single factor that brings its largest
/// row norm to one. All-zero rows and blocks keep a factor of one.
///
/// # Panics
///
/// If the cone blocks reach past the rows of `g_hat` or `rhs`.
pub fn block_row_normalize(g_hat: &DMatrix<f64>, rhs: &DVector<f64>, cones: &[ConeBlock]) -> RowNormalization {
    let m = g_hat.nrows();
    assert_eq!(rhs.len(), m, "offset length must match the constraint rows");
    let norms: Vec<f64> = (0..m).map(|i| g_hat.row(i).norm()).collect();
    let mut e_diag = DVector::from_element(m, 1.0);
    for block in cones {
        let range = block.range();
        match block.kind {
            ConeKind::Zero | ConeKind::Nonnegative => {
                for i in range {
                    if norms[i] > 0.0 {
                        e_diag[i] = 1.0 / norms[i];
                    }
                }
            }
            ConeKind::SecondOrder => {
                let largest = norms[range.clone()].iter().copied().fold(0.0, f64::max);
                if largest > 0.0 {
                    e_diag.rows_mut(range.start, range.len()).fill(1.0 / largest);
                }
            }
        }
    }
    let mut constraints = g_hat.clone();
    for (i, mut row) in constraints.row_iter_mut().enumerate() {
        row *= e_diag[i];
    }
    RowNormalization {
        constraints,
        rhs: rhs.component_mul(&e_diag),
        e_diag,
    }
}

/// Estimates the extreme eigenvalues of `H Hᵀ` and returns the scale
/// `λ* = √(σ_min / 2)` that minimizes the KKT condition number, computed
/// from the buffered `σ_min`.
pub fn choose_lambda(h: &DMatrix<f64>, cfg: &PowerIterationConfig) -> Result<(f64, SpectralEstimates)> {
    let estimates = estimate_spectrum(h, cfg)?;
    if h.nrows() == 0 {
        return Ok((1.0, estimates));
    }
    if !(estimates.sigma_min > 0.0) {
        return Err(Error::InvalidInput(format!(
            "constraint matrix looks rank deficient (smallest eigenvalue estimate {:e})",
            estimates.sigma_min
        )));
    }
    Ok((optimal_lambda(estimates.sigma_min)?, estimates))
}
