use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use hypersphere::linalg::{estimate_spectrum, PowerIterationConfig};
use hypersphere::problem::{kappa_at_optimum, kkt_condition_number, optimal_lambda};
use hypersphere::{
    hypersphere_step, precondition, read_problem, recover_solution, ruiz_equilibrate, solve, PipgConfig, PlainProblem,
    Qcp, RuizConfig, Termination,
};
use hypersphere_bench::report::format_real;
use hypersphere_bench::sweep::{dense_condition_number, plain_kkt};
use hypersphere_bench::{
    default_gammas, emit_csv, generate, run_sweep, write_csv, BenchError, GeneratorConfig, Preconditioner, SweepConfig,
};

#[derive(Parser)]
#[command(name = "hsbench", version, about = "Hypersphere preconditioning benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecondArg {
    None,
    Ruiz,
    Hypersphere,
    All,
}

impl PrecondArg {
    fn expand(self) -> Vec<Preconditioner> {
        match self {
            Self::None => vec![Preconditioner::None],
            Self::Ruiz => vec![Preconditioner::Ruiz],
            Self::Hypersphere => vec![Preconditioner::Hypersphere],
            Self::All => Preconditioner::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SinglePrecond {
    None,
    Ruiz,
    Hypersphere,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the terminal weight γ over the optimal-control family.
    Sweep {
        /// Comma-separated list; defaults to 1,10,…,1e6.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "all")]
        precond: PrecondArg,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        /// Relative error against the reference solution.
        #[arg(long, default_value_t = 0.005)]
        tol: f64,
        /// Draws the initial state from this seed instead of (5, 5, 0, 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave the timing columns empty so reruns are byte-identical.
        #[arg(long)]
        no_timings: bool,
    },
    /// Solve a problem file.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "hypersphere")]
        precond: SinglePrecond,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        /// Fixed-point residual tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print condition numbers at λ = 1 and λ* and the KKT spectrum summary.
    Diagnose {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Write a generated instance in the problem file format.
    Generate {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Cells,
    Input(String),
    Runtime(String),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::InvalidConfig(_) | BenchError::Unsupported(_) | BenchError::Parse(_) => {
                Self::Input(e.to_string())
            }
            BenchError::Core(
                hypersphere::Error::InvalidInput(_)
                | hypersphere::Error::InvalidProblem(_)
                | hypersphere::Error::DimensionMismatch { .. }
                | hypersphere::Error::IncompatibleScaling { .. }
                | hypersphere::Error::NotPositiveDefinite { .. }
                | hypersphere::Error::Format(_)
                | hypersphere::Error::Io(_),
            ) => Self::Input(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<hypersphere::Error> for Failure {
    fn from(e: hypersphere::Error) -> Self {
        BenchError::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Cells) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Sweep {
            gammas,
            precond,
            horizon,
            max_iters,
            tol,
            seed,
            out,
            no_timings,
        } => {
            let cfg = SweepConfig {
                generator: GeneratorConfig {
                    horizon,
                    seed,
                    ..Default::default()
                },
                max_iters,
                tol,
                ..Default::default()
            };
            let gammas = gammas.unwrap_or_else(default_gammas);
            let output = run_sweep(&gammas, &precond.expand(), &cfg)?;
            let rows: Vec<_> = if no_timings {
                output.results.iter().map(|r| r.without_timings()).collect()
            } else {
                output.results
            };
            match out {
                Some(path) => emit_csv(&rows, path)?,
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
            for f in &output.failures {
                eprintln!(
                    "cell gamma={} preconditioner={} failed: {}",
                    f.gamma, f.preconditioner, f.message
                );
            }
            if output.failures.is_empty() {
                Ok(())
            } else {
                Err(Failure::Cells)
            }
        }
        Command::Solve {
            problem,
            precond,
            max_iters,
            tol,
            report,
        } => solve_file(&read_problem(problem)?, precond, max_iters, tol, report),
        Command::Diagnose { problem } => diagnose(&read_problem(problem)?),
        Command::Generate {
            gamma,
            horizon,
            seed,
            out,
        } => {
            let qcp = generate(&GeneratorConfig {
                gamma,
                horizon,
                seed,
                ..Default::default()
            })?;
            hypersphere::write_problem(out, &qcp)?;
            Ok(())
        }
    }
}

fn solve_file(
    qcp: &Qcp,
    which: SinglePrecond,
    max_iters: usize,
    tol: f64,
    report: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = PipgConfig {
        max_iters,
        termination: Termination::FixedPointResidual(tol),
        ..Default::default()
    };
    cfg.validate()?;
    let power = PowerIterationConfig::default();
    let start = Instant::now();
    let (name, presolve_ms, rep, xi, mu, sigma_max) = match which {
        SinglePrecond::None => {
            let plain = PlainProblem::new(qcp.clone(), &power)?;
            let presolve = start.elapsed().as_secs_f64() * 1e3;
            let rep = solve(&plain, &cfg, None)?;
            let (xi, mu) = (rep.z.clone(), rep.eta.clone());
            ("none", presolve, rep, xi, mu, plain.sigma_max)
        }
        SinglePrecond::Ruiz => {
            let eq = ruiz_equilibrate(qcp, &RuizConfig::default())?;
            let plain = PlainProblem::new(eq.problem.clone(), &power)?;
            let presolve = start.elapsed().as_secs_f64() * 1e3;
            let rep = solve(&plain, &cfg, None)?;
            let (xi, mu) = eq.recover(&rep.z, &rep.eta)?;
            ("ruiz", presolve, rep, xi, mu, plain.sigma_max)
        }
        SinglePrecond::Hypersphere => {
            let (pre, t) = precondition(qcp, &power)?;
            let presolve = start.elapsed().as_secs_f64() * 1e3;
            let rep = solve(&pre, &cfg, None)?;
            let (xi, mu) = recover_solution(&t, &rep.z, &rep.eta)?;
            ("hypersphere", presolve, rep, xi, mu, pre.estimates.sigma_max)
        }
    };
    let kkt = qcp.kkt_residuals(&xi, &mu)?;
    println!("preconditioner   {name}");
    println!("converged        {}", rep.converged());
    println!("iterations       {}", rep.iterations);
    println!("objective        {}", format_real(qcp.objective(&xi)?));
    println!("kkt residual     {}", format_real(kkt.max()));
    println!("solution         {}", join(xi.iter()));
    if let Some(path) = report {
        let mut w = csv::Writer::from_path(path).map_err(BenchError::from)?;
        let header = [
            "preconditioner",
            "iterations",
            "converged",
            "presolve_ms",
            "solve_ms",
            "sigma_max",
            "objective",
            "kkt_residual",
        ];
        w.write_record(header).map_err(BenchError::from)?;
        w.write_record([
            name.to_string(),
            rep.iterations.to_string(),
            rep.converged().to_string(),
            format_real(presolve_ms),
            format_real(rep.wall_time.as_secs_f64() * 1e3),
            format_real(sigma_max),
            format_real(qcp.objective(&xi)?),
            format_real(kkt.max()),
        ])
        .map_err(BenchError::from)?;
        w.flush().map_err(BenchError::from)?;
    }
    if rep.converged() {
        Ok(())
    } else {
        eprintln!("did not converge within {max_iters} iterations");
        Err(Failure::Cells)
    }
}

fn join<'a>(v: impl Iterator<Item = &'a f64>) -> String {
    v.map(|x| format_real(*x)).collect::<Vec<_>>().join(" ")
}

fn diagnose(qcp: &Qcp) -> Result<(), Failure> {
    let power = PowerIterationConfig::default();
    let n = qcp.num_vars();
    let m = qcp.num_constraints();
    println!("n = {n}, m = {m}");
    if m == 0 {
        println!("no constraint rows: the KKT matrix is λI and κ = 1 for every λ");
        return Ok(());
    }
    let step = hypersphere_step(qcp)?;
    let normalized = hypersphere::block_row_normalize(&step.constraints, &step.rhs, &qcp.cones);
    let est = estimate_spectrum(&normalized.constraints, &power)?;
    let lambda_star = optimal_lambda(est.sigma_min)?;
    println!("sigma_max (HHᵀ)  {}", format_real(est.sigma_max));
    println!("sigma_min (HHᵀ)  {}  (buffered)", format_real(est.sigma_min));
    println!("chi              {}", format_real(est.chi()));
    println!(
        "power iters      {} + {} shifted",
        est.power_iterations, est.iterations_used
    );
    println!("lambda*          {}", format_real(lambda_star));
    for (label, lambda) in [("1", 1.0), ("lambda*", lambda_star)] {
        let kappa = kkt_condition_number(lambda, est.sigma_min, est.sigma_max)?;
        println!("kappa(lambda={label:<7}) {}", format_real(kappa));
    }
    println!("kappa lower bound {}", format_real(kappa_at_optimum(est.chi())?));
    let theta = |s: f64, sign: f64| (lambda_star + sign * (lambda_star * lambda_star + 4.0 * s).sqrt()) / 2.0;
    println!("spectrum at lambda*:");
    println!("  lambda* with multiplicity {}", n - m);
    println!(
        "  positive branch in [{}, {}]",
        format_real(theta(est.sigma_min, 1.0)),
        format_real(theta(est.sigma_max, 1.0))
    );
    println!(
        "  negative branch in [{}, {}]",
        format_real(theta(est.sigma_max, -1.0)),
        format_real(theta(est.sigma_min, -1.0))
    );
    if n + m <= 2000 {
        let original = dense_condition_number(plain_kkt(qcp));
        println!(
            "dense kappa of the unpreconditioned KKT matrix {}",
            format_real(original)
        );
    }
    Ok(())
}
