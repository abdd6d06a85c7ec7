use hypersphere::cones::SetKind;
use hypersphere_bench::generator::{dynamics, STATE_DIM};
use hypersphere_bench::{generate, GeneratorConfig};
use nalgebra::DVector;

#[test]
fn equality_block_has_full_row_rank() {
    for horizon in [3, 5, 10] {
        let qcp = generate(&GeneratorConfig {
            horizon,
            ..Default::default()
        })
        .unwrap();
        let sv = qcp.constraints.clone().singular_values();
        let m = qcp.num_constraints();
        assert_eq!(sv.len(), m);
        assert!(sv.min() > 1e-8 * sv.max(), "T = {horizon}: {sv}");
        assert!(qcp.num_vars() > m);
    }
}

#[test]
fn a_simulated_trajectory_is_feasible() {
    let cfg = GeneratorConfig {
        horizon: 6,
        ..Default::default()
    };
    let qcp = generate(&cfg).unwrap();
    let (a, b) = dynamics(cfg.dt);
    let inputs: Vec<DVector<f64>> = (0..5)
        .map(|t| DVector::from_vec(vec![0.3 * t as f64 - 0.5, -0.2]))
        .collect();
    let mut xi = DVector::zeros(qcp.num_vars());
    let mut x = DVector::from_row_slice(&cfg.initial_state);
    for (t, u) in inputs.iter().enumerate() {
        xi.rows_mut(STATE_DIM * t, STATE_DIM).copy_from(&x);
        xi.rows_mut(STATE_DIM * cfg.horizon + 2 * t, 2).copy_from(u);
        x = &a * &x + &b * u;
    }
    xi.rows_mut(STATE_DIM * (cfg.horizon - 1), STATE_DIM).copy_from(&x);
    assert!((&qcp.constraints * &xi - &qcp.rhs).amax() <= 1e-14);
    assert!(hypersphere::cones::set_violation(&qcp.sets, &xi).unwrap() == 0.0);
}

#[test]
fn initial_state_is_pinned_and_limits_are_boxes() {
    let cfg = GeneratorConfig::default();
    let qcp = generate(&cfg).unwrap();
    let SetKind::Box { lower, upper } = &qcp.sets[0].kind else {
        panic!("first set should be a box");
    };
    assert_eq!(lower, upper);
    assert_eq!(lower.as_slice(), &cfg.initial_state);
    assert!(qcp.sets.iter().all(|s| matches!(s.kind, SetKind::Box { .. })));
    let covered: usize = qcp.sets.iter().map(|s| s.dim).sum();
    assert_eq!(covered, qcp.num_vars());
}

#[test]
fn terminal_weight_only_touches_the_last_state() {
    let base = generate(&GeneratorConfig::default()).unwrap().hessian.diagonal();
    let heavy = generate(&GeneratorConfig {
        gamma: 1e4,
        ..Default::default()
    })
    .unwrap()
    .hessian
    .diagonal();
    let last = STATE_DIM * 49;
    for i in 0..base.len() {
        let expected = if (last..last + STATE_DIM).contains(&i) {
            1e4 * base[i]
        } else {
            base[i]
        };
        assert_eq!(heavy[i], expected);
    }
}
