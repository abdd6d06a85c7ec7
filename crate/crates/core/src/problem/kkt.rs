//! Closed-form conditioning of the saddle-point matrix
//!
//! ```text
//! K = [ λI  Hᵀ ]
//!     [ H   0  ]
//! ```
//!
//! for a full-row-rank `H` (m × n, n > m). Each eigenvalue `σ` of `H Hᵀ`
//! contributes the pair `(λ ± √(λ² + 4σ)) / 2` and the null space of `H`
//! contributes `λ` with multiplicity `n − m`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn theta_plus(lambda: f64, sigma: f64) -> f64 {
    0.5 * (lambda + (lambda * lambda + 4.0 * sigma).sqrt())
}

/// Magnitude of the negative eigenvalue, `(√(λ² + 4σ) − λ) / 2`, written as
/// `2σ / (λ + √(λ² + 4σ))` to avoid cancellation when `σ ≪ λ²`.
fn theta_minus_abs(lambda: f64, sigma: f64) -> f64 {
    2.0 * sigma / (lambda + (lambda * lambda + 4.0 * sigma).sqrt())
}

/// All `n + m` eigenvalues of `K`, sorted ascending.
pub fn kkt_spectrum(lambda: f64, sigmas: &[f64], n: usize) -> Result<Vec<f64>> {
    positive("lambda", lambda)?;
    for &s in sigmas {
        positive("squared singular value", s)?;
    }
    let m = sigmas.len();
    if n <= m && m > 0 {
        return Err(Error::InvalidInput(format!("need n > m, got n = {n}, m = {m}")));
    }
    let mut out = Vec::with_capacity(n + m);
    out.extend(std::iter::repeat_n(lambda, n - m));
    for &s in sigmas {
        out.push(theta_plus(lambda, s));
        out.push(-theta_minus_abs(lambda, s));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Condition number of `K` (largest over smallest eigenvalue magnitude) as a
/// function of the objective scale `λ` and the extreme eigenvalues of `H Hᵀ`.
pub fn kkt_condition_number(lambda: f64, sigma_min: f64, sigma_max: f64) -> Result<f64> {
    positive("lambda", lambda)?;
    positive("sigma_min", sigma_min)?;
    positive("sigma_max", sigma_max)?;
    if sigma_min > sigma_max {
        return Err(Error::InvalidInput(format!(
            "sigma_min {sigma_min} exceeds sigma_max {sigma_max}"
        )));
    }
    Ok(theta_plus(lambda, sigma_max) / lambda.min(theta_minus_abs(lambda, sigma_min)))
}

/// The objective scale minimizing [`kkt_condition_number`]: `√(σ_min / 2)`.
pub fn optimal_lambda(sigma_min: f64) -> Result<f64> {
    positive("sigma_min", sigma_min)?;
    Ok((0.5 * sigma_min).sqrt())
}

/// Condition number reached at the optimal scale, `(1 + √(1 + 8χ)) / 2`,
/// with `χ = σ_max / σ_min ≥ 1`. It never drops below 2.
pub fn kappa_at_optimum(chi: f64) -> Result<f64> {
    if !(chi >= 1.0 && chi.is_finite()) {
        return Err(Error::InvalidInput(format!("chi must be finite and >= 1, got {chi}")));
    }
    Ok(0.5 * (1.0 + (1.0 + 8.0 * chi).sqrt()))
}

/// Dense `K` for a given `λ` and `H`, for diagnostics and tests.
pub fn assemble_kkt(lambda: f64, h: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = h.shape();
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).fill_diagonal(lambda);
    k.view_mut((n, 0), (m, n)).copy_from(h);
    k.view_mut((0, n), (n, m)).copy_from(&h.transpose());
    k
}

/// Summary of `K` for one `λ`, built from the eigenvalues of `H Hᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktDiagnostics {
    pub lambda: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Ascending eigenvalues of `K`, repeated by multiplicity.
    pub spectrum: Vec<f64>,
    pub kappa: f64,
    /// Condition number of `H Hᵀ`.
    pub chi: f64,
}

impl KktDiagnostics {
    pub fn new(lambda: f64, sigmas: &[f64], n: usize) -> Result<Self> {
        let spectrum = kkt_spectrum(lambda, sigmas, n)?;
        let sigma_min = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
        let sigma_max = sigmas.iter().copied().fold(0.0, f64::max);
        let kappa = kkt_condition_number(lambda, sigma_min, sigma_max)?;
        Ok(Self {
            lambda,
            sigma_min,
            sigma_max,
            spectrum,
            kappa,
            chi: sigma_max / sigma_min,
        })
    }
}
