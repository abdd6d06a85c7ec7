use hypersphere::problem::assemble_kkt;
use hypersphere::{precondition, PowerIterationConfig};
use hypersphere_bench::sweep::{dense_condition_number, plain_kkt};
use hypersphere_bench::{
    default_gammas, generate, read_csv, run_cell, run_sweep, to_csv_string, GeneratorConfig, Preconditioner,
    SweepConfig,
};

fn short(horizon: usize) -> SweepConfig {
    SweepConfig {
        generator: GeneratorConfig {
            horizon,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn hypersphere_kappa_never_exceeds_the_unpreconditioned_one() {
    for gamma in default_gammas() {
        let qcp = generate(&GeneratorConfig {
            gamma,
            ..Default::default()
        })
        .unwrap();
        let none = dense_condition_number(plain_kkt(&qcp));
        let (pre, _) = precondition(&qcp, &PowerIterationConfig::default()).unwrap();
        let hs = dense_condition_number(assemble_kkt(pre.lambda, &pre.constraints));
        assert!(hs <= none, "γ = {gamma}: {hs} > {none}");
    }
}

#[test]
fn paper_protocol_cells() {
    let cfg = SweepConfig::default();
    let qcp = generate(&GeneratorConfig::default()).unwrap();
    let hs = run_cell(&qcp, 1.0, Preconditioner::Hypersphere, &cfg).unwrap();
    assert!(hs.result.converged);
    assert!(hs.result.sigma_min.is_some() && hs.result.spi_iterations.is_some());

    let stiff = generate(&GeneratorConfig {
        gamma: 1e4,
        ..Default::default()
    })
    .unwrap();
    let none = run_cell(&stiff, 1e4, Preconditioner::None, &cfg).unwrap();
    assert!(!none.result.converged);
    assert_eq!(none.result.iterations, 100_000);
    assert_eq!(none.result.sigma_min, None);
}

#[test]
fn converged_cells_recover_kkt_points() {
    // a tight reference tolerance so the recovered point is a KKT point
    let cfg = SweepConfig {
        tol: 1e-9,
        max_iters: 300_000,
        ..short(10)
    };
    for gamma in [1.0, 1e3] {
        let gen = GeneratorConfig {
            gamma,
            ..cfg.generator.clone()
        };
        let qcp = generate(&gen).unwrap();
        for p in Preconditioner::ALL {
            let run = run_cell(&qcp, gamma, p, &cfg).unwrap();
            assert!(run.reference.kkt_residual <= 1e-9);
            if p == Preconditioner::Hypersphere {
                assert!(run.result.converged);
            }
            if run.result.converged {
                let res = qcp.kkt_residuals(&run.xi, &run.mu).unwrap();
                assert!(res.max() <= 1e-6, "γ = {gamma}, {p}: {res:?}");
            }
        }
    }
}

#[test]
fn sweeps_are_deterministic_and_ordered() {
    let cfg = SweepConfig {
        generator: GeneratorConfig {
            horizon: 8,
            seed: Some(9),
            ..Default::default()
        },
        ..Default::default()
    };
    let gammas = [100.0, 1.0];
    let a = run_sweep(&gammas, &Preconditioner::ALL, &cfg).unwrap();
    let b = run_sweep(&gammas, &Preconditioner::ALL, &cfg).unwrap();
    assert!(a.failures.is_empty());
    let strip = |o: &hypersphere_bench::SweepOutput| {
        let rows: Vec<_> = o.results.iter().map(|r| r.without_timings()).collect();
        to_csv_string(&rows).unwrap()
    };
    assert_eq!(strip(&a), strip(&b));
    let keys: Vec<_> = a.results.iter().map(|r| (r.gamma, r.preconditioner.name())).collect();
    assert_eq!(
        keys,
        [
            (1.0, "hypersphere"),
            (1.0, "none"),
            (1.0, "ruiz"),
            (100.0, "hypersphere"),
            (100.0, "none"),
            (100.0, "ruiz")
        ]
    );
    // timed output parses back to the same values
    let text = to_csv_string(&a.results).unwrap();
    assert_eq!(read_csv(text.as_bytes()).unwrap(), a.results);
}

#[test]
fn failing_cells_do_not_stop_the_sweep() {
    // moving right at the edge of the state box with weak inputs is infeasible
    let bad = GeneratorConfig {
        horizon: 4,
        initial_state: [9.9, 0.0, 2.0, 0.0],
        input_bound: [0.1, 0.1],
        ..Default::default()
    };
    let cfg = SweepConfig {
        generator: bad,
        ..Default::default()
    };
    let out = run_sweep(&[1.0, 10.0], &[Preconditioner::Hypersphere, Preconditioner::None], &cfg).unwrap();
    assert!(out.results.is_empty());
    assert_eq!(out.failures.len(), 4);
    assert!(out.failures[0].message.contains("reference solver failed"));
    assert_eq!(
        (out.failures[0].gamma, out.failures[0].preconditioner),
        (1.0, Preconditioner::Hypersphere)
    );

    let empty = run_sweep(&[], &Preconditioner::ALL, &short(4)).unwrap();
    assert!(empty.results.is_empty() && empty.failures.is_empty());
}
