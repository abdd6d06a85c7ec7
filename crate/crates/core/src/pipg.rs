//! Proportional-integral projected gradient (PIPG).
//!
//! One iteration for `minimize f(z)` subject to `Hz − h ∈ K`, `z ∈ D`:
//!
//! ```text
//! z⁺ = Π_D [ζ − α(∇f(ζ) + Hᵀη)]
//! w⁺ = Π_K° [η + β(H(2z⁺ − ζ) − h)]
//! ζ⁺ = (1 − ρ)ζ + ρz⁺
//! η⁺ = (1 − ρ)η + ρw⁺
//! ```
//!
//! Only matrix-vector products and projections appear in the loop.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::cones::{project_onto_polars, project_onto_sets, ConeBlock, SetBlock};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{power_iteration, PowerIterationConfig};
use crate::precond::{precondition, recover_solution, PreconditionedQcp, TransformRecord};
use crate::problem::Qcp;

/// A problem PIPG can run on: a smooth strongly convex objective, linear
/// constraints into a cone product, and a separable domain.
pub trait PipgProblem {
    fn num_vars(&self) -> usize;
    fn num_constraints(&self) -> usize;
    /// Writes `∇f(z)` into `out`.
    fn gradient_into(&self, z: &DVector<f64>, out: &mut DVector<f64>);
    /// Lipschitz constant of `∇f`.
    fn gradient_lipschitz(&self) -> f64;
    fn constraints(&self) -> &DMatrix<f64>;
    fn rhs(&self) -> &DVector<f64>;
    fn cones(&self) -> &[ConeBlock];
    fn sets(&self) -> &[SetBlock];
    /// Largest eigenvalue of `H Hᵀ`.
    fn sigma_max(&self) -> f64;
}

/// `f(z) = λ(½ zᵀz + qᵀz)`.
impl PipgProblem for PreconditionedQcp {
    fn num_vars(&self) -> usize {
        self.q.len()
    }

    fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    fn gradient_into(&self, z: &DVector<f64>, out: &mut DVector<f64>) {
        out.copy_from(z);
        *out += &self.q;
        *out *= self.lambda;
    }

    fn gradient_lipschitz(&self) -> f64 {
        self.lambda
    }

    fn constraints(&self) -> &DMatrix<f64> {
        &self.constraints
    }

    fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    fn cones(&self) -> &[ConeBlock] {
        &self.cones
    }

    fn sets(&self) -> &[SetBlock] {
        &self.sets
    }

    fn sigma_max(&self) -> f64 {
        self.estimates.sigma_max
    }
}

/// A [`Qcp`] as given, with `f(ξ) = ½ξᵀPξ + pᵀξ`. Used for the
/// unpreconditioned and equilibrated baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct PlainProblem {
    pub qcp: Qcp,
    pub sigma_max: f64,
    pub hessian_norm: f64,
    /// Power iterations spent on `sigma_max`.
    pub power_iterations: usize,
}

impl PlainProblem {
    pub fn new(qcp: Qcp, cfg: &PowerIterationConfig) -> Result<Self> {
        let est = power_iteration(&qcp.constraints, cfg)?;
        let hessian_norm = qcp.hessian.largest_eigenvalue();
        Ok(Self {
            qcp,
            sigma_max: est.value,
            hessian_norm,
            power_iterations: est.iterations,
        })
    }
}

impl PipgProblem for PlainProblem {
    fn num_vars(&self) -> usize {
        self.qcp.num_vars()
    }

    fn num_constraints(&self) -> usize {
        self.qcp.num_constraints()
    }

    fn gradient_into(&self, z: &DVector<f64>, out: &mut DVector<f64>) {
        self.qcp.hessian.mul_vec_into(z, out);
        *out += &self.qcp.cost;
    }

    fn gradient_lipschitz(&self) -> f64 {
        self.hessian_norm
    }

    fn constraints(&self) -> &DMatrix<f64> {
        &self.qcp.constraints
    }

    fn rhs(&self) -> &DVector<f64> {
        &self.qcp.rhs
    }

    fn cones(&self) -> &[ConeBlock] {
        &self.qcp.cones
    }

    fn sets(&self) -> &[SetBlock] {
        &self.qcp.sets
    }

    fn sigma_max(&self) -> f64 {
        self.sigma_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Stop once `‖z − z_ref‖ / max(‖z_ref‖, 1) ≤ tol`.
    ReferenceRelativeError(f64),
    /// Stop once `‖z⁺ − ζ‖/(αL) ≤ tol(1 + ‖z⁺‖)` and `‖w⁺ − η‖/β ≤ tol(1 + ‖w⁺‖)`,
    /// where `L` is the gradient Lipschitz constant.
    FixedPointResidual(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipgConfig {
    /// Step-size ratio parameter `ω = √(β/α)`.
    pub omega: f64,
    /// Extrapolation weight in `(0, 2)`.
    pub rho: f64,
    pub max_iters: usize,
    pub termination: Termination,
    /// Iterations between termination checks.
    pub check_interval: usize,
}

impl Default for PipgConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            rho: 1.5,
            max_iters: 100_000,
            termination: Termination::FixedPointResidual(1e-6),
            check_interval: 10,
        }
    }
}

impl PipgConfig {
    pub fn validate(&self) -> Result<()> {
        let tol = match self.termination {
            Termination::ReferenceRelativeError(t) | Termination::FixedPointResidual(t) => t,
        };
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if !(self.rho > 0.0 && self.rho < 2.0) {
            return Err(Error::InvalidInput(format!("rho must lie in (0, 2), got {}", self.rho)));
        }
        if self.max_iters == 0 || self.check_interval == 0 {
            return Err(Error::InvalidInput(
                "max_iters and check_interval must be at least 1".into(),
            ));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        Ok(())
    }
}

/// `α = 2 / (L + √(L² + 4ω²σ_max))` and `β = ω²α`, so that
/// `α(L + βσ_max) = 1`. With `σ_max = 0` (no constraints) this is `α = 1/L`.
pub fn step_sizes(lipschitz: f64, omega: f64, sigma_max: f64) -> Result<(f64, f64)> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "gradient Lipschitz constant must be positive, got {lipschitz}"
        )));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
    }
    if !(sigma_max >= 0.0 && sigma_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sigma_max must be nonnegative, got {sigma_max}"
        )));
    }
    let alpha = 2.0 / (lipschitz + (lipschitz * lipschitz + 4.0 * omega * omega * sigma_max).sqrt());
    Ok((alpha, omega * omega * alpha))
}

/// `ω* = λ √(2 / σ_min)`; exactly 1 at `λ = √(σ_min / 2)`.
pub fn optimal_omega(lambda: f64, sigma_min: f64) -> Result<f64> {
    if !(lambda > 0.0 && sigma_min > 0.0) {
        return Err(Error::InvalidInput(
            "optimal omega needs lambda > 0 and sigma_min > 0".into(),
        ));
    }
    Ok(lambda / (0.5 * sigma_min).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipgState {
    pub z: DVector<f64>,
    pub w: DVector<f64>,
    pub zeta: DVector<f64>,
    pub eta: DVector<f64>,
    pub iter: usize,
}

impl PipgState {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self::warm(DVector::zeros(n), DVector::zeros(m))
    }

    /// Starts from `ζ⁰ = z⁰ = zeta` and `η⁰ = w⁰ = eta`.
    pub fn warm(zeta: DVector<f64>, eta: DVector<f64>) -> Self {
        Self {
            z: zeta.clone(),
            w: eta.clone(),
            zeta,
            eta,
            iter: 0,
        }
    }
}

struct Workspace {
    grad: DVector<f64>,
    ext: DVector<f64>,
    slack: DVector<f64>,
}

impl Workspace {
    fn new(n: usize, m: usize) -> Self {
        Self {
            grad: DVector::zeros(n),
            ext: DVector::zeros(n),
            slack: DVector::zeros(m),
        }
    }
}

fn distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One in-place sweep. Returns `(‖z⁺ − ζ‖, ‖w⁺ − η‖)`.
fn step<P: PipgProblem + ?Sized>(
    s: &mut PipgState,
    p: &P,
    alpha: f64,
    beta: f64,
    rho: f64,
    ws: &mut Workspace,
) -> (f64, f64) {
    let h = p.constraints();
    p.gradient_into(&s.zeta, &mut ws.grad);
    ws.grad.gemv_tr(1.0, h, &s.eta, 1.0);
    s.z.copy_from(&s.zeta);
    s.z.axpy(-alpha, &ws.grad, 1.0);
    project_onto_sets(p.sets(), &mut s.z).expect("set scaling is checked before iterating");

    ws.ext.copy_from(&s.zeta);
    ws.ext.axpy(2.0, &s.z, -1.0);
    ws.slack.copy_from(p.rhs());
    ws.slack.gemv(1.0, h, &ws.ext, -1.0);
    s.w.copy_from(&s.eta);
    s.w.axpy(beta, &ws.slack, 1.0);
    project_onto_polars(p.cones(), &mut s.w);

    let moved = (distance(&s.z, &s.zeta), distance(&s.w, &s.eta));
    s.zeta.axpy(rho, &s.z, 1.0 - rho);
    s.eta.axpy(rho, &s.w, 1.0 - rho);
    s.iter += 1;
    moved
}

fn check_problem<P: PipgProblem + ?Sized>(p: &P) -> Result<()> {
    let (n, m) = (p.num_vars(), p.num_constraints());
    check_dim("constraint rows", m, p.constraints().nrows())?;
    check_dim("constraint columns", n, p.constraints().ncols())?;
    check_dim("constraint offset", m, p.rhs().len())?;
    for s in p.sets() {
        s.check().map_err(Error::InvalidInput)?;
        s.check_scaling()?;
        if s.range().end > n {
            return Err(Error::InvalidInput(format!(
                "set block at offset {} runs past {n} variables",
                s.offset
            )));
        }
    }
    if p.cones().iter().any(|c| c.range().end > m) {
        return Err(Error::InvalidInput(format!("cone blocks run past {m} constraint rows")));
    }
    Ok(())
}

/// One PIPG iteration from `state`, returning the next state.
///
/// # Panics
///
/// If a set block of `problem` cannot be projected onto (see
/// [`SetBlock::check_scaling`]); [`solve`] checks this up front.
pub fn iterate<P: PipgProblem + ?Sized>(state: &PipgState, problem: &P, alpha: f64, beta: f64, rho: f64) -> PipgState {
    let mut next = state.clone();
    let mut ws = Workspace::new(problem.num_vars(), problem.num_constraints());
    step(&mut next, problem, alpha, beta, rho, &mut ws);
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterationsReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub stop: StopReason,
    /// `‖z⁺ − ζ‖ / (αL)` at the last iteration.
    pub primal_residual: f64,
    /// `‖w⁺ − η‖ / β` at the last iteration.
    pub dual_residual: f64,
    /// Relative distance to the reference, when one was given.
    pub reference_error: Option<f64>,
    pub z: DVector<f64>,
    /// The last projected dual iterate `w⁺`, which always lies in `K°`.
    pub eta: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }
}

/// Runs PIPG from zero.
pub fn solve<P: PipgProblem + ?Sized>(
    problem: &P,
    cfg: &PipgConfig,
    reference: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    solve_from(
        problem,
        cfg,
        reference,
        PipgState::zeros(problem.num_vars(), problem.num_constraints()),
    )
}

/// Runs PIPG from a caller-provided state.
pub fn solve_from<P: PipgProblem + ?Sized>(
    problem: &P,
    cfg: &PipgConfig,
    reference: Option<&DVector<f64>>,
    initial: PipgState,
) -> Result<SolveReport> {
    let start = Instant::now();
    cfg.validate()?;
    check_problem(problem)?;
    let (n, m) = (problem.num_vars(), problem.num_constraints());
    for (what, expected, v) in [("initial zeta", n, &initial.zeta), ("initial z", n, &initial.z)] {
        check_dim(what, expected, v.len())?;
    }
    for (what, expected, v) in [("initial eta", m, &initial.eta), ("initial w", m, &initial.w)] {
        check_dim(what, expected, v.len())?;
    }
    if let Some(r) = reference {
        check_dim("reference solution", n, r.len())?;
    }
    if matches!(cfg.termination, Termination::ReferenceRelativeError(_)) && reference.is_none() {
        return Err(Error::InvalidInput(
            "reference termination needs a reference solution".into(),
        ));
    }
    let lipschitz = problem.gradient_lipschitz();
    let (alpha, beta) = step_sizes(lipschitz, cfg.omega, problem.sigma_max())?;
    let ref_norm = reference.map(|r| r.norm().max(1.0));

    let mut state = initial;
    let first_iter = state.iter;
    let mut ws = Workspace::new(n, m);
    let mut stop = StopReason::MaxIterationsReached;
    let mut residuals = (f64::INFINITY, f64::INFINITY);
    let mut reference_error = None;
    for k in 1..=cfg.max_iters {
        let (dz, dw) = step(&mut state, problem, alpha, beta, cfg.rho, &mut ws);
        residuals = (dz / (alpha * lipschitz), dw / beta);
        if k % cfg.check_interval != 0 && k != cfg.max_iters {
            continue;
        }
        let done = match cfg.termination {
            Termination::ReferenceRelativeError(tol) => {
                let r = reference.expect("checked above");
                let err = distance(&state.z, r) / ref_norm.expect("checked above");
                reference_error = Some(err);
                err <= tol
            }
            Termination::FixedPointResidual(tol) => {
                if let (Some(r), Some(norm)) = (reference, ref_norm) {
                    reference_error = Some(distance(&state.z, r) / norm);
                }
                residuals.0 <= tol * (1.0 + state.z.norm()) && residuals.1 <= tol * (1.0 + state.w.norm())
            }
        };
        if done {
            stop = StopReason::Converged;
            break;
        }
    }

    Ok(SolveReport {
        iterations: state.iter - first_iter,
        stop,
        primal_residual: residuals.0,
        dual_residual: residuals.1,
        reference_error,
        z: state.z,
        eta: state.w,
        alpha,
        beta,
        wall_time: start.elapsed(),
    })
}

/// A solution of the original problem obtained through the hypersphere
/// preconditioner.
#[derive(Debug, Clone, PartialEq)]
pub struct QcpSolution {
    pub xi: DVector<f64>,
    pub mu: DVector<f64>,
    pub report: SolveReport,
    pub problem: PreconditionedQcp,
    pub transform: TransformRecord,
}

/// Preconditions `qcp`, runs PIPG with `ω = 1` (optimal at `λ*`) unless the
/// config says otherwise, and maps the result back.
pub fn solve_qcp(qcp: &Qcp, power: &PowerIterationConfig, cfg: &PipgConfig) -> Result<QcpSolution> {
    let (problem, transform) = precondition(qcp, power)?;
    let report = solve(&problem, cfg, None)?;
    let (xi, mu) = recover_solution(&transform, &report.z, &report.eta)?;
    Ok(QcpSolution {
        xi,
        mu,
        report,
        problem,
        transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{cone_layout, ConeKind};
    use crate::linalg::SpectralEstimates;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn estimates(sigma_max: f64, sigma_min: f64) -> SpectralEstimates {
        SpectralEstimates {
            sigma_max,
            sigma_min,
            shift_estimate: sigma_max - sigma_min,
            iterations_used: 0,
            converged: true,
            power_iterations: 0,
            power_converged: true,
            degenerate: false,
        }
    }

    fn one_dimensional() -> PreconditionedQcp {
        PreconditionedQcp {
            lambda: 1.0,
            q: dvector![0.0],
            constraints: dmatrix![1.0],
            rhs: dvector![1.0],
            cones: cone_layout(&[(ConeKind::Zero, 1)]),
            sets: vec![SetBlock::free(0, 1)],
            estimates: estimates(1.0, 1.0),
        }
    }

    #[test]
    fn step_size_examples() {
        let (a, b) = step_sizes(1.0, 1.0, 4.0).unwrap();
        assert_relative_eq!(a, 2.0 / (1.0 + 17.0_f64.sqrt()), max_relative = 1e-15);
        assert_relative_eq!(a, 0.39039, max_relative = 1e-5);
        assert_eq!(a, b);
        assert_relative_eq!(a * (1.0 + b * 4.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(step_sizes(1.0, 1.0, 1e-14).unwrap().0, 1.0, epsilon = 1e-12);
        let (a1, b1) = step_sizes(1.0, 1.0, 3.0).unwrap();
        let (a2, b2) = step_sizes(1.0, 2.0, 3.0).unwrap();
        assert_relative_eq!((b2 / a2) / (b1 / a1), 4.0, max_relative = 1e-15);
        assert!(step_sizes(0.0, 1.0, 1.0).is_err());
        assert!(step_sizes(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn omega_examples() {
        assert_eq!(optimal_omega(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(optimal_omega(2.0, 2.0).unwrap(), 2.0);
        for s in [1e-6, 0.37, 3.0, 1e4] {
            let lambda = crate::problem::optimal_lambda(s).unwrap();
            assert_eq!(optimal_omega(lambda, s).unwrap(), 1.0);
        }
        assert!(optimal_omega(0.0, 1.0).is_err());
    }

    #[test]
    fn one_dimensional_equality_converges() {
        let p = one_dimensional();
        let (a, b) = step_sizes(1.0, 1.0, 1.0).unwrap();
        let mut s = PipgState::zeros(1, 1);
        for _ in 0..200 {
            s = iterate(&s, &p, a, b, 1.5);
        }
        assert_relative_eq!(s.z[0], 1.0, epsilon = 1e-10);
        // stationarity: λz + η = 0
        assert_relative_eq!(s.w[0], -1.0, epsilon = 1e-10);
    }

    #[test]
    fn unconstrained_iteration_finds_minus_q() {
        let p = PreconditionedQcp {
            lambda: 2.0,
            q: dvector![1.0, -3.0],
            constraints: DMatrix::zeros(0, 2),
            rhs: DVector::zeros(0),
            cones: vec![],
            sets: vec![SetBlock::free(0, 2)],
            estimates: estimates(0.0, 0.0),
        };
        let r = solve(&p, &PipgConfig::default(), None).unwrap();
        assert!(r.converged());
        assert_relative_eq!(r.z, dvector![-1.0, 3.0], epsilon = 1e-8);
    }

    #[test]
    fn rho_one_means_no_extrapolation() {
        let p = one_dimensional();
        let s = PipgState::warm(dvector![0.3], dvector![-0.2]);
        let next = iterate(&s, &p, 0.5, 0.5, 1.0);
        assert_eq!(next.zeta, next.z);
        assert_eq!(next.eta, next.w);
        assert_eq!(next.iter, 1);
    }

    #[test]
    fn reference_termination() {
        let p = one_dimensional();
        let cfg = PipgConfig {
            termination: Termination::ReferenceRelativeError(0.005),
            check_interval: 1,
            ..Default::default()
        };
        let r = solve(&p, &cfg, Some(&dvector![1.0])).unwrap();
        assert!(r.converged() && r.iterations >= 1);
        assert!(r.reference_error.unwrap() <= 0.005);
        assert!(solve(&p, &cfg, None).is_err());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let p = one_dimensional();
        let cfg = PipgConfig {
            max_iters: 3,
            termination: Termination::FixedPointResidual(1e-14),
            ..Default::default()
        };
        let r = solve(&p, &cfg, None).unwrap();
        assert_eq!(r.stop, StopReason::MaxIterationsReached);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn config_validation() {
        let bad = [
            PipgConfig {
                omega: 0.0,
                ..Default::default()
            },
            PipgConfig {
                rho: 2.0,
                ..Default::default()
            },
            PipgConfig {
                max_iters: 0,
                ..Default::default()
            },
            PipgConfig {
                termination: Termination::FixedPointResidual(0.0),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn plain_problem_box_clamp() {
        // min ½(x−2)² s.t. x ≤ 1
        let qcp = Qcp {
            hessian: crate::linalg::StructuredSpdMatrix::identity(1),
            cost: dvector![-2.0],
            constraints: DMatrix::zeros(0, 1),
            rhs: DVector::zeros(0),
            cones: vec![],
            sets: vec![SetBlock::bounded(0, vec![f64::NEG_INFINITY], vec![1.0])],
        };
        let p = PlainProblem::new(qcp, &PowerIterationConfig::default()).unwrap();
        let r = solve(&p, &PipgConfig::default(), None).unwrap();
        assert_relative_eq!(r.z[0], 1.0, epsilon = 1e-12);
    }
}
