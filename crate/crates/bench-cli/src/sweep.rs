//! The γ sweep: one cell per (terminal weight, preconditioner).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use hypersphere::linalg::PowerIterationConfig;
use hypersphere::problem::assemble_kkt;
use hypersphere::{
    precondition, recover_solution, ruiz_equilibrate, solve, PipgConfig, PlainProblem, Qcp, RuizConfig, Termination,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{BenchError, Result};
use crate::generator::{generate, GeneratorConfig};
use crate::reference::{reference_solve, ReferenceSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preconditioner {
    None,
    Ruiz,
    Hypersphere,
}

impl Preconditioner {
    pub const ALL: [Preconditioner; 3] = [Self::None, Self::Ruiz, Self::Hypersphere];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Ruiz => "ruiz",
            Self::Hypersphere => "hypersphere",
        }
    }
}

impl fmt::Display for Preconditioner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preconditioner {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| BenchError::InvalidConfig(format!("unknown preconditioner {s:?}")))
    }
}

/// The paper's γ grid, `1, 10, …, 10⁶`.
pub fn default_gammas() -> Vec<f64> {
    (0..=6).map(|k| 10f64.powi(k)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Problem template; `gamma` is overwritten per cell.
    pub generator: GeneratorConfig,
    pub max_iters: usize,
    /// Relative error against the reference solution.
    pub tol: f64,
    pub power: PowerIterationConfig,
    pub ruiz: RuizConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            max_iters: 100_000,
            tol: 0.005,
            power: PowerIterationConfig::default(),
            ruiz: RuizConfig::default(),
        }
    }
}

impl SweepConfig {
    fn pipg(&self) -> PipgConfig {
        PipgConfig {
            max_iters: self.max_iters,
            termination: Termination::ReferenceRelativeError(self.tol),
            check_interval: 1,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub gamma: f64,
    pub preconditioner: Preconditioner,
    /// Dense-eigensolver condition number of the KKT matrix PIPG actually sees.
    pub kappa_kkt: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Preconditioning, including every power iteration.
    pub presolve_ms: Option<f64>,
    pub solve_ms: Option<f64>,
    /// Buffered shifted-power estimate; hypersphere cells only.
    pub sigma_min: Option<f64>,
    pub sigma_max: f64,
    /// Shifted power iterations; hypersphere cells only.
    pub spi_iterations: Option<usize>,
}

impl SweepResult {
    /// The same row with wall-clock fields cleared, for byte-stable output.
    pub fn without_timings(&self) -> Self {
        Self {
            presolve_ms: None,
            solve_ms: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub gamma: f64,
    pub preconditioner: Preconditioner,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    /// Sorted by γ, then preconditioner name.
    pub results: Vec<SweepResult>,
    pub failures: Vec<CellFailure>,
}

/// Everything a cell computed, including the recovered solution.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub result: SweepResult,
    pub xi: DVector<f64>,
    pub mu: DVector<f64>,
    pub reference: ReferenceSolution,
}

/// `max |eig| / min |eig|` of a symmetric matrix.
pub fn dense_condition_number(k: DMatrix<f64>) -> f64 {
    let eig = k.symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), e| {
        (lo.min(e.abs()), hi.max(e.abs()))
    });
    hi / lo
}

/// `[[P, Gᵀ], [G, 0]]` for a plain problem.
pub fn plain_kkt(qcp: &Qcp) -> DMatrix<f64> {
    let n = qcp.num_vars();
    let m = qcp.num_constraints();
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(&qcp.hessian.to_dense());
    k.view_mut((n, 0), (m, n)).copy_from(&qcp.constraints);
    k.view_mut((0, n), (n, m)).copy_from(&qcp.constraints.transpose());
    k
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs one cell on an already generated problem.
pub fn run_cell(qcp: &Qcp, gamma: f64, which: Preconditioner, cfg: &SweepConfig) -> Result<CellRun> {
    let reference = reference_solve(qcp)?;
    let pipg = cfg.pipg();
    let start = Instant::now();
    let (kappa_kkt, report, presolve_ms, sigma_min, sigma_max, spi, xi, mu) = match which {
        Preconditioner::None => {
            let plain = PlainProblem::new(qcp.clone(), &cfg.power)?;
            let presolve_ms = millis(start);
            let report = solve(&plain, &pipg, Some(&reference.xi))?;
            let kappa = dense_condition_number(plain_kkt(qcp));
            let (xi, mu) = (report.z.clone(), report.eta.clone());
            (kappa, report, presolve_ms, None, plain.sigma_max, None, xi, mu)
        }
        Preconditioner::Ruiz => {
            let eq = ruiz_equilibrate(qcp, &cfg.ruiz)?;
            let plain = PlainProblem::new(eq.problem.clone(), &cfg.power)?;
            let presolve_ms = millis(start);
            let target = eq.to_scaled_primal(&reference.xi)?;
            let report = solve(&plain, &pipg, Some(&target))?;
            let kappa = dense_condition_number(plain_kkt(&eq.problem));
            let (xi, mu) = eq.recover(&report.z, &report.eta)?;
            (kappa, report, presolve_ms, None, plain.sigma_max, None, xi, mu)
        }
        Preconditioner::Hypersphere => {
            let (pre, t) = precondition(qcp, &cfg.power)?;
            let presolve_ms = millis(start);
            let target = t.to_scaled_primal(&reference.xi)?;
            let report = solve(&pre, &pipg, Some(&target))?;
            let kappa = dense_condition_number(assemble_kkt(pre.lambda, &pre.constraints));
            let (xi, mu) = recover_solution(&t, &report.z, &report.eta)?;
            let est = &pre.estimates;
            (
                kappa,
                report,
                presolve_ms,
                Some(est.sigma_min),
                est.sigma_max,
                Some(est.iterations_used),
                xi,
                mu,
            )
        }
    };
    Ok(CellRun {
        result: SweepResult {
            gamma,
            preconditioner: which,
            kappa_kkt,
            iterations: report.iterations,
            converged: report.converged(),
            presolve_ms: Some(presolve_ms),
            solve_ms: Some(report.wall_time.as_secs_f64() * 1e3),
            sigma_min,
            sigma_max,
            spi_iterations: spi,
        },
        xi,
        mu,
        reference,
    })
}

/// Runs every (γ, preconditioner) cell in parallel. Cells that error are
/// reported in `failures` and the rest of the sweep carries on.
pub fn run_sweep(gammas: &[f64], preconditioners: &[Preconditioner], cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.generator.validate()?;
    if !(cfg.tol > 0.0) || cfg.max_iters == 0 {
        return Err(BenchError::InvalidConfig("tol and max_iters must be positive".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(BenchError::InvalidConfig(format!("gamma must be positive, got {g}")));
    }
    let mut cells: Vec<(f64, Preconditioner)> = Vec::new();
    for &g in gammas {
        for &p in preconditioners {
            if !cells.contains(&(g, p)) {
                cells.push((g, p));
            }
        }
    }
    let outcomes: Vec<_> = cells
        .par_iter()
        .map(|&(gamma, which)| {
            let gen = GeneratorConfig {
                gamma,
                ..cfg.generator.clone()
            };
            let run = generate(&gen).and_then(|qcp| run_cell(&qcp, gamma, which, cfg));
            (gamma, which, run)
        })
        .collect();

    let mut out = SweepOutput::default();
    for (gamma, preconditioner, run) in outcomes {
        match run {
            Ok(run) => out.results.push(run.result),
            Err(e) => out.failures.push(CellFailure {
                gamma,
                preconditioner,
                message: e.to_string(),
            }),
        }
    }
    sort_results(&mut out.results);
    out.failures.sort_by(|a, b| {
        a.gamma
            .total_cmp(&b.gamma)
            .then_with(|| a.preconditioner.name().cmp(b.preconditioner.name()))
    });
    Ok(out)
}

/// γ ascending, then preconditioner name ascending.
pub fn sort_results(results: &mut [SweepResult]) {
    results.sort_by(|a, b| {
        a.gamma
            .total_cmp(&b.gamma)
            .then_with(|| a.preconditioner.name().cmp(b.preconditioner.name()))
    });
}
