//! Extreme eigenvalues of `M = H Hᵀ` from matrix-vector products only.
//!
//! The largest eigenvalue comes from plain power iteration. The smallest one
//! comes from power iteration on the shifted matrix `M − σ_max I`, which is
//! negative semidefinite with dominant eigenvalue magnitude `σ_max − σ_min`.
//! Neither needs a factorization, so both can run against a structure-aware
//! operator as easily as against a dense matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A shifted estimate below this is treated as exactly zero: every eigenvalue
/// of `M` coincides with `σ_max`.
pub const DEGENERATE_SHIFT: f64 = 1e-300;

/// Seed of the default starting vector. A fixed pseudo-random start avoids
/// the all-ones vector, which is an eigenvector of `H Hᵀ` whenever the rows
/// of `H` have equal norms and equal pairwise overlaps, as after row
/// normalization of two rows.
pub const DEFAULT_SEED: u64 = 0x5eed;

/// An `m × n` linear map applied forwards and transposed.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = H x`, with `x` of length `ncols` and `y` of length `nrows`.
    fn apply_into(&self, x: &DVector<f64>, y: &mut DVector<f64>);
    /// `y = Hᵀ x`, with `x` of length `nrows` and `y` of length `ncols`.
    fn apply_transpose_into(&self, x: &DVector<f64>, y: &mut DVector<f64>);
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        DMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        DMatrix::ncols(self)
    }

    fn apply_into(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        y.gemv(1.0, self, x, 0.0);
    }

    fn apply_transpose_into(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        y.gemv_tr(1.0, self, x, 0.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialVector {
    /// All ones.
    Ones,
    /// Uniform entries in `[-1, 1)` from a seeded generator.
    Seeded(u64),
    Given(DVector<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterationConfig {
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Fraction by which the smallest-eigenvalue estimate is shrunk.
    pub eps_buff: f64,
    pub max_iters: usize,
    pub initial: InitialVector,
}

impl Default for PowerIterationConfig {
    fn default() -> Self {
        Self {
            eps_abs: 1e-9,
            eps_rel: 1e-9,
            eps_buff: 0.01,
            max_iters: 50_000,
            initial: InitialVector::Seeded(DEFAULT_SEED),
        }
    }
}

impl PowerIterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return Err(Error::InvalidInput(
                "power iteration tolerances must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.eps_buff) {
            return Err(Error::InvalidInput("eps_buff must lie in [0, 1)".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("power iteration needs max_iters >= 1".into()));
        }
        Ok(())
    }

    pub fn initial_vector(&self, m: usize) -> Result<DVector<f64>> {
        let w = match &self.initial {
            InitialVector::Ones => DVector::from_element(m, 1.0),
            InitialVector::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0))
            }
            InitialVector::Given(w) => {
                if w.len() != m {
                    return Err(Error::DimensionMismatch {
                        context: "power iteration initial vector",
                        expected: m,
                        found: w.len(),
                    });
                }
                w.clone()
            }
        };
        if m > 0 && !(w.norm() > 0.0) {
            return Err(Error::InvalidInput(
                "power iteration initial vector must be nonzero".into(),
            ));
        }
        Ok(w)
    }

    fn settled(&self, next: f64, prev: f64) -> bool {
        (next - prev).abs() <= self.eps_abs + self.eps_rel * next.max(prev)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Extreme eigenvalues of `H Hᵀ` and how they were obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimates {
    pub sigma_max: f64,
    /// Buffered estimate `(1 − ε_buff)(σ_max − σ̃)`.
    pub sigma_min: f64,
    /// Final magnitude `σ̃` from the shifted iteration, an estimate of
    /// `σ_max − σ_min`.
    pub shift_estimate: f64,
    /// Iterations used by the shifted iteration.
    pub iterations_used: usize,
    pub converged: bool,
    pub power_iterations: usize,
    pub power_converged: bool,
    /// The shifted iterate vanished: all eigenvalues equal `σ_max`.
    pub degenerate: bool,
}

impl SpectralEstimates {
    /// `σ_max / σ_min`, the condition number of `H Hᵀ` implied by the estimates.
    pub fn chi(&self) -> f64 {
        self.sigma_max / self.sigma_min
    }
}

/// Largest eigenvalue of `H Hᵀ`.
pub fn power_iteration<H: LinearOperator + ?Sized>(h: &H, cfg: &PowerIterationConfig) -> Result<PowerEstimate> {
    cfg.validate()?;
    let m = h.nrows();
    let mut w = cfg.initial_vector(m)?;
    if m == 0 {
        return Ok(PowerEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut z = DVector::zeros(h.ncols());
    let mut next = DVector::zeros(m);
    let mut estimate = w.norm();
    for j in 1..=cfg.max_iters {
        h.apply_transpose_into(&w, &mut z);
        h.apply_into(&z, &mut next);
        next /= estimate;
        let candidate = next.norm();
        if candidate < DEGENERATE_SHIFT {
            // w lies in the null space of Hᵀ.
            return Ok(PowerEstimate {
                value: 0.0,
                iterations: j,
                converged: false,
            });
        }
        std::mem::swap(&mut w, &mut next);
        let done = cfg.settled(candidate, estimate);
        estimate = candidate;
        if done {
            return Ok(PowerEstimate {
                value: estimate,
                iterations: j,
                converged: true,
            });
        }
    }
    Ok(PowerEstimate {
        value: estimate,
        iterations: cfg.max_iters,
        converged: false,
    })
}

/// Smallest eigenvalue of `H Hᵀ` by power iteration on `H Hᵀ − σ_max I`.
///
/// `sigma_max` must bound the spectrum from above. The iterate is rescaled by
/// the previous magnitude each step, so `σ̃` tracks the dominant magnitude of
/// the shifted matrix; the initial magnitude is the norm of the raw starting
/// vector.
pub fn shifted_power_iteration<H: LinearOperator + ?Sized>(
    h: &H,
    sigma_max: f64,
    cfg: &PowerIterationConfig,
) -> Result<SpectralEstimates> {
    cfg.validate()?;
    if !(sigma_max >= 0.0) {
        return Err(Error::InvalidInput("sigma_max must be nonnegative".into()));
    }
    let m = h.nrows();
    let mut w = cfg.initial_vector(m)?;
    let mut z = DVector::zeros(h.ncols());
    let mut hz = DVector::zeros(m);

    let mut sigma_tilde = w.norm();
    let mut sigma_tilde_star = sigma_tilde;
    let mut iterations = 0;
    let mut converged = false;
    let mut degenerate = m == 0;

    if !degenerate {
        for j in 1..=cfg.max_iters {
            iterations = j;
            h.apply_transpose_into(&w, &mut z);
            h.apply_into(&z, &mut hz);
            // w ← (H z − σ_max w) / σ̃
            w.axpy(1.0 / sigma_tilde, &hz, -sigma_max / sigma_tilde);
            sigma_tilde_star = w.norm();
            if sigma_tilde_star < DEGENERATE_SHIFT {
                sigma_tilde_star = 0.0;
                degenerate = true;
                converged = true;
                break;
            }
            if cfg.settled(sigma_tilde_star, sigma_tilde) {
                converged = true;
                break;
            } else if j < cfg.max_iters {
                sigma_tilde = sigma_tilde_star;
            }
        }
    }

    let sigma_min = ((1.0 - cfg.eps_buff) * (sigma_max - sigma_tilde_star)).max(0.0);
    Ok(SpectralEstimates {
        sigma_max,
        sigma_min,
        shift_estimate: sigma_tilde_star,
        iterations_used: iterations,
        converged,
        power_iterations: 0,
        power_converged: true,
        degenerate,
    })
}

/// Runs both estimators: `σ_max` first, then the shifted iteration for `σ_min`.
pub fn estimate_spectrum<H: LinearOperator + ?Sized>(h: &H, cfg: &PowerIterationConfig) -> Result<SpectralEstimates> {
    let top = power_iteration(h, cfg)?;
    let mut est = shifted_power_iteration(h, top.value, cfg)?;
    est.power_iterations = top.iterations;
    est.power_converged = top.converged;
    Ok(est)
}
