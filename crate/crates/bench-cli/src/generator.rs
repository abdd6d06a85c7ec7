//! Planar double-integrator optimal control as a [`Qcp`].
//!
//! The state is `(position, velocity) ∈ ℝ⁴` and the input an acceleration in
//! `ℝ²`. Decision variables are stacked as `[x₁, …, x_T, u₁, …, u_{T−1}]`,
//! so `n = 4T + 2(T − 1)` and the dynamics give `m = 4(T − 1)` equality rows.
//! The initial state is pinned by a box with equal bounds.

use hypersphere::cones::{cone_layout, ConeKind, SetBlock};
use hypersphere::{Qcp, StructuredSpdMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};

pub const STATE_DIM: usize = 4;
pub const INPUT_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub horizon: usize,
    /// Diagonal of `Q`.
    pub state_cost: [f64; STATE_DIM],
    /// Terminal weight `γ`; the terminal cost is `γQ`.
    pub gamma: f64,
    /// Diagonal of the input cost.
    pub input_cost: [f64; INPUT_DIM],
    pub state_bound: [f64; STATE_DIM],
    pub input_bound: [f64; INPUT_DIM],
    pub dt: f64,
    pub initial_state: [f64; STATE_DIM],
    /// When set, the initial state is drawn from this seed instead
    /// (positions in `[−8, 8]`, velocities in `[−2, 2]`).
    pub seed: Option<u64>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            horizon: 50,
            state_cost: [1.0, 1.0, 0.5, 0.5],
            gamma: 1.0,
            input_cost: [0.1, 0.1],
            state_bound: [10.0; STATE_DIM],
            input_bound: [1.0; INPUT_DIM],
            dt: 0.1,
            initial_state: [5.0, 5.0, 0.0, 0.0],
            seed: None,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: &[f64]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        if self.horizon < 2 {
            return Err(BenchError::InvalidConfig(format!(
                "horizon must be at least 2, got {}",
                self.horizon
            )));
        }
        if !positive(&self.state_cost) || !positive(&self.input_cost) || !positive(&[self.gamma]) {
            return Err(BenchError::InvalidConfig(
                "cost weights and gamma must be positive".into(),
            ));
        }
        if !positive(&self.state_bound) || !positive(&self.input_bound) {
            return Err(BenchError::InvalidConfig("box half-widths must be positive".into()));
        }
        if !positive(&[self.dt]) {
            return Err(BenchError::InvalidConfig("dt must be positive".into()));
        }
        let x0 = self.start();
        if x0.iter().zip(&self.state_bound).any(|(x, b)| x.abs() > *b) {
            return Err(BenchError::InvalidConfig(
                "initial state lies outside the state box".into(),
            ));
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        STATE_DIM * self.horizon + INPUT_DIM * (self.horizon - 1)
    }

    pub fn num_constraints(&self) -> usize {
        STATE_DIM * (self.horizon - 1)
    }

    /// The initial state actually used.
    pub fn start(&self) -> [f64; STATE_DIM] {
        match self.seed {
            None => self.initial_state,
            Some(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                [
                    rng.random_range(-8.0..8.0),
                    rng.random_range(-8.0..8.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ]
            }
        }
    }

    fn state_offset(&self, t: usize) -> usize {
        STATE_DIM * t
    }

    fn input_offset(&self, t: usize) -> usize {
        STATE_DIM * self.horizon + INPUT_DIM * t
    }
}

/// Discrete double integrator: `A = [[I, ΔtI], [0, I]]`, `B = [[½Δt²I], [ΔtI]]`.
pub fn dynamics(dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut a = DMatrix::identity(STATE_DIM, STATE_DIM);
    a[(0, 2)] = dt;
    a[(1, 3)] = dt;
    let mut b = DMatrix::zeros(STATE_DIM, INPUT_DIM);
    b[(0, 0)] = 0.5 * dt * dt;
    b[(1, 1)] = 0.5 * dt * dt;
    b[(2, 0)] = dt;
    b[(3, 1)] = dt;
    (a, b)
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Qcp> {
    cfg.validate()?;
    let t_len = cfg.horizon;
    let n = cfg.num_vars();
    let m = cfg.num_constraints();
    let (a, b) = dynamics(cfg.dt);

    let mut diag = DVector::zeros(n);
    for t in 0..t_len {
        let w = if t + 1 == t_len { cfg.gamma } else { 1.0 };
        for i in 0..STATE_DIM {
            diag[cfg.state_offset(t) + i] = w * cfg.state_cost[i];
        }
    }
    for t in 0..t_len - 1 {
        for i in 0..INPUT_DIM {
            diag[cfg.input_offset(t) + i] = cfg.input_cost[i];
        }
    }

    // x_{t+1} − A x_t − B u_t = 0
    let mut g = DMatrix::zeros(m, n);
    for t in 0..t_len - 1 {
        let row = STATE_DIM * t;
        for i in 0..STATE_DIM {
            g[(row + i, cfg.state_offset(t + 1) + i)] = 1.0;
            for j in 0..STATE_DIM {
                g[(row + i, cfg.state_offset(t) + j)] = -a[(i, j)];
            }
            for j in 0..INPUT_DIM {
                g[(row + i, cfg.input_offset(t) + j)] = -b[(i, j)];
            }
        }
    }

    let x0 = cfg.start();
    let mut sets = vec![SetBlock::bounded(0, x0.to_vec(), x0.to_vec())];
    for t in 1..t_len {
        let hi = cfg.state_bound.to_vec();
        let lo = hi.iter().map(|v| -v).collect();
        sets.push(SetBlock::bounded(cfg.state_offset(t), lo, hi));
    }
    for t in 0..t_len - 1 {
        let hi = cfg.input_bound.to_vec();
        let lo = hi.iter().map(|v| -v).collect();
        sets.push(SetBlock::bounded(cfg.input_offset(t), lo, hi));
    }

    Ok(Qcp {
        hessian: StructuredSpdMatrix::Diagonal(diag),
        cost: DVector::zeros(n),
        constraints: g,
        rhs: DVector::zeros(m),
        cones: cone_layout(&[(ConeKind::Zero, m)]),
        sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_for_a_short_horizon() {
        let cfg = GeneratorConfig {
            horizon: 3,
            ..Default::default()
        };
        let q = generate(&cfg).unwrap();
        assert_eq!((q.num_vars(), q.num_constraints()), (16, 8));
        assert!(hypersphere::validate(&q).is_empty());
    }

    #[test]
    fn hessian_entries() {
        let cfg = GeneratorConfig {
            horizon: 3,
            gamma: 7.0,
            ..Default::default()
        };
        let q = generate(&cfg).unwrap();
        let d = q.hessian.diagonal();
        assert_eq!(d.rows(0, 4).as_slice(), &[1.0, 1.0, 0.5, 0.5]);
        assert_eq!(d.rows(8, 4).as_slice(), &[7.0, 7.0, 3.5, 3.5]);
        assert_eq!(d.rows(12, 4).as_slice(), &[0.1; 4]);
    }

    #[test]
    fn rejects_bad_configs() {
        for cfg in [
            GeneratorConfig {
                horizon: 1,
                ..Default::default()
            },
            GeneratorConfig {
                gamma: 0.0,
                ..Default::default()
            },
            GeneratorConfig {
                input_bound: [1.0, -1.0],
                ..Default::default()
            },
            GeneratorConfig {
                initial_state: [20.0, 0.0, 0.0, 0.0],
                ..Default::default()
            },
        ] {
            assert!(matches!(generate(&cfg), Err(BenchError::InvalidConfig(_))));
        }
    }

    #[test]
    fn seeded_start_is_reproducible_and_inside_the_box() {
        let cfg = GeneratorConfig {
            seed: Some(3),
            ..Default::default()
        };
        assert_eq!(cfg.start(), cfg.start());
        assert_ne!(cfg.start(), GeneratorConfig::default().start());
        assert!(cfg.validate().is_ok());
    }
}
