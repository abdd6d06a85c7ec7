#![allow(dead_code)]

use hypersphere::{cone_layout, ConeKind, Qcp, SetBlock, StructuredSpdMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = normal_matrix(rng, n, n);
    a.transpose() * &a / n as f64 + DMatrix::identity(n, n) * 0.5
}

/// A random hessian in one of the three storage layouts.
pub fn random_hessian(rng: &mut ChaCha8Rng, n: usize) -> StructuredSpdMatrix {
    match rng.random_range(0..3) {
        0 => StructuredSpdMatrix::Diagonal(DVector::from_fn(n, |_, _| rng.random_range(0.1..10.0))),
        1 => {
            let mut blocks = Vec::new();
            let mut left = n;
            while left > 0 {
                let k = rng.random_range(1..=left.min(4));
                blocks.push(random_spd(rng, k));
                left -= k;
            }
            StructuredSpdMatrix::BlockDiagonal(blocks)
        }
        _ => StructuredSpdMatrix::Dense(random_spd(rng, n)),
    }
}

/// `minimize ½ξᵀPξ + pᵀξ` subject to `Gξ = g`, unconstrained domain.
pub fn random_equality_qp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Qcp {
    Qcp {
        hessian: random_hessian(rng, n),
        cost: normal_vector(rng, n),
        constraints: normal_matrix(rng, m, n),
        rhs: normal_vector(rng, m),
        cones: cone_layout(&[(ConeKind::Zero, m)]),
        sets: vec![SetBlock::free(0, n)],
    }
}

/// Solves the KKT system of an equality-constrained QP by dense LU.
pub fn dense_kkt_solve(qcp: &Qcp) -> (DVector<f64>, DVector<f64>) {
    let n = qcp.num_vars();
    let m = qcp.num_constraints();
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(&qcp.hessian.to_dense());
    k.view_mut((n, 0), (m, n)).copy_from(&qcp.constraints);
    k.view_mut((0, n), (n, m)).copy_from(&qcp.constraints.transpose());
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(-&qcp.cost));
    rhs.rows_mut(n, m).copy_from(&qcp.rhs);
    let sol = k.lu().solve(&rhs).expect("KKT matrix is nonsingular");
    (sol.rows(0, n).into_owned(), sol.rows(n, m).into_owned())
}

/// `‖Pξ + p + Gᵀμ‖`.
pub fn stationarity(qcp: &Qcp, xi: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    (qcp.hessian.to_dense() * xi + &qcp.cost + qcp.constraints.transpose() * mu).norm()
}

pub fn sorted_eigenvalues(k: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = k.clone().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Eigenvalues of `H Hᵀ`, ascending.
pub fn gram_eigenvalues(h: &DMatrix<f64>) -> Vec<f64> {
    sorted_eigenvalues(&(h * h.transpose()))
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}
