//! Modified Ruiz equilibration of the KKT data `[[P, Gᵀ], [G, 0]]`.
//!
//! Each pass divides every row and column by the square root of its
//! infinity norm. Coordinates that must scale together (second-order cone
//! rows, ball and second-order cone set blocks) share the smallest factor in
//! their block. With `scale_cost`, the objective is also multiplied by a
//! scalar that brings its average column norm near one.

use nalgebra::{DMatrix, DVector};

use crate::cones::{ConeKind, SetKind};
use crate::error::{check_dim, Error, Result};
use crate::problem::Qcp;

const COST_SCALE_RANGE: (f64, f64) = (1e-4, 1e4);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuizConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub scale_cost: bool,
}

impl Default for RuizConfig {
    fn default() -> Self {
        Self {
            max_iters: 25,
            tol: 1e-6,
            scale_cost: true,
        }
    }
}

impl RuizConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidInput(
                "Ruiz equilibration needs max_iters >= 1 and tol > 0".into(),
            ));
        }
        Ok(())
    }
}

/// The equilibrated problem in `x̄ = D⁻¹ξ`:
/// `minimize c(½ x̄ᵀ DPD x̄ + pᵀD x̄)` subject to `E_r G D x̄ − E_r g ∈ L`,
/// `D x̄ ∈ E`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuizResult {
    pub problem: Qcp,
    /// `D`.
    pub col_scale: DVector<f64>,
    /// `E_r`.
    pub row_scale: DVector<f64>,
    /// `c`.
    pub cost_scale: f64,
    /// Passes performed before the norms settled or the cap was hit.
    pub iterations: usize,
}

impl RuizResult {
    /// `ξ = D x̄` and `μ = E_r μ̄ / c`.
    pub fn recover(&self, x: &DVector<f64>, mu: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        check_dim("primal vector", self.col_scale.len(), x.len())?;
        check_dim("dual vector", self.row_scale.len(), mu.len())?;
        Ok((
            x.component_mul(&self.col_scale),
            mu.component_mul(&self.row_scale) / self.cost_scale,
        ))
    }

    /// `x̄ = D⁻¹ξ`.
    pub fn to_scaled_primal(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("primal vector", self.col_scale.len(), xi.len())?;
        Ok(xi.component_div(&self.col_scale))
    }
}

struct Norms {
    cols: Vec<f64>,
    rows: Vec<f64>,
}

fn kkt_norms(p: &DMatrix<f64>, g: &DMatrix<f64>, d: &DVector<f64>, e: &DVector<f64>, c: f64) -> Norms {
    let (m, n) = g.shape();
    let mut cols = vec![0.0_f64; n];
    let mut rows = vec![0.0_f64; m];
    for j in 0..n {
        for i in 0..n {
            cols[j] = cols[j].max((c * d[i] * p[(i, j)] * d[j]).abs());
        }
        for i in 0..m {
            let v = (e[i] * g[(i, j)] * d[j]).abs();
            cols[j] = cols[j].max(v);
            rows[i] = rows[i].max(v);
        }
    }
    Norms { cols, rows }
}

fn factors(norms: &[f64]) -> Vec<f64> {
    norms
        .iter()
        .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
        .collect()
}

fn share_min(f: &mut [f64]) {
    let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
    f.iter_mut().for_each(|v| *v = lo);
}

pub fn ruiz_equilibrate(qcp: &Qcp, cfg: &RuizConfig) -> Result<RuizResult> {
    cfg.validate()?;
    let n = qcp.num_vars();
    let m = qcp.num_constraints();
    let p = qcp.hessian.to_dense();
    let g = &qcp.constraints;
    check_dim("hessian", n, p.nrows())?;
    check_dim("constraint rows", m, g.nrows())?;
    check_dim("constraint columns", n, g.ncols())?;

    let mut coupled_cols = vec![false; n];
    for s in &qcp.sets {
        if matches!(s.kind, SetKind::Ball { .. } | SetKind::SecondOrderCone) {
            coupled_cols[s.range()].fill(true);
        }
    }
    let mut coupled_rows = vec![false; m];
    for b in &qcp.cones {
        if b.kind == ConeKind::SecondOrder {
            coupled_rows[b.range()].fill(true);
        }
    }

    let mut d = DVector::from_element(n, 1.0);
    let mut e = DVector::from_element(m, 1.0);
    let mut c = 1.0;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let norms = kkt_norms(&p, g, &d, &e, c);
        let settled = |v: &[f64], coupled: &[bool]| {
            v.iter()
                .zip(coupled)
                .all(|(&x, &k)| k || x == 0.0 || (1.0 - x).abs() <= cfg.tol)
        };
        if settled(&norms.cols, &coupled_cols) && settled(&norms.rows, &coupled_rows) {
            break;
        }
        let mut df = factors(&norms.cols);
        let mut ef = factors(&norms.rows);
        for s in &qcp.sets {
            if matches!(s.kind, SetKind::Ball { .. } | SetKind::SecondOrderCone) {
                share_min(&mut df[s.range()]);
            }
        }
        for b in &qcp.cones {
            if b.kind == ConeKind::SecondOrder {
                share_min(&mut ef[b.range()]);
            }
        }
        d.component_mul_assign(&DVector::from_vec(df));
        e.component_mul_assign(&DVector::from_vec(ef));

        if cfg.scale_cost {
            let cols = kkt_norms(&p, &DMatrix::zeros(0, n), &d, &DVector::zeros(0), c).cols;
            let mean = if n > 0 {
                cols.iter().sum::<f64>() / n as f64
            } else {
                0.0
            };
            let cost = (c * d.component_mul(&qcp.cost)).amax();
            let size = mean.max(cost);
            if size > 0.0 {
                c *= (1.0 / size).clamp(COST_SCALE_RANGE.0, COST_SCALE_RANGE.1);
            }
        }
        iterations += 1;
    }

    let mut constraints = g.clone();
    for (i, mut row) in constraints.row_iter_mut().enumerate() {
        row *= e[i];
    }
    for (j, mut col) in constraints.column_iter_mut().enumerate() {
        col *= d[j];
    }
    let sets = qcp
        .sets
        .iter()
        .map(|s| {
            let scale = s
                .scale
                .iter()
                .zip(&d.as_slice()[s.range()])
                .map(|(a, b)| a / b)
                .collect();
            s.clone().with_scale(scale)
        })
        .collect();
    let problem = Qcp {
        hessian: qcp.hessian.congruence_scaled(&d, c),
        cost: d.component_mul(&qcp.cost) * c,
        constraints,
        rhs: qcp.rhs.component_mul(&e),
        cones: qcp.cones.clone(),
        sets,
    };
    Ok(RuizResult {
        problem,
        col_scale: d,
        row_scale: e,
        cost_scale: c,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{cone_layout, SetBlock};
    use crate::linalg::StructuredSpdMatrix;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn sample() -> Qcp {
        Qcp {
            hessian: StructuredSpdMatrix::Diagonal(dvector![100.0, 1.0, 0.01]),
            cost: dvector![1.0, -2.0, 0.5],
            constraints: dmatrix![1.0, 20.0, 0.0; 0.0, 0.3, 4.0],
            rhs: dvector![1.0, 2.0],
            cones: cone_layout(&[(ConeKind::Zero, 1), (ConeKind::Nonnegative, 1)]),
            sets: vec![SetBlock::bounded(0, vec![-1.0; 3], vec![1.0; 3])],
        }
    }

    #[test]
    fn identity_data_is_unchanged() {
        let q = Qcp {
            hessian: StructuredSpdMatrix::identity(2),
            cost: DVector::zeros(2),
            constraints: DMatrix::identity(2, 2),
            rhs: dvector![1.0, 1.0],
            cones: cone_layout(&[(ConeKind::Zero, 2)]),
            sets: vec![SetBlock::free(0, 2)],
        };
        let r = ruiz_equilibrate(&q, &RuizConfig::default()).unwrap();
        assert_eq!(r.problem, q);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn norms_settle_near_one() {
        let cfg = RuizConfig {
            scale_cost: false,
            ..Default::default()
        };
        let r = ruiz_equilibrate(&sample(), &cfg).unwrap();
        let ones = DVector::from_element(3, 1.0);
        let norms = kkt_norms(
            &r.problem.hessian.to_dense(),
            &r.problem.constraints,
            &ones,
            &dvector![1.0, 1.0],
            1.0,
        );
        for v in norms.cols.iter().chain(&norms.rows) {
            assert!(*v <= 1.0 + 1e-15 && *v >= 1.0 - cfg.tol, "{v}");
        }
    }

    #[test]
    fn recovery_inverts_the_scaling() {
        let r = ruiz_equilibrate(&sample(), &RuizConfig::default()).unwrap();
        let xi = dvector![0.3, -0.2, 0.9];
        let x = r.to_scaled_primal(&xi).unwrap();
        let (back, mu) = r.recover(&x, &dvector![1.0, 1.0]).unwrap();
        assert_relative_eq!(back, xi, max_relative = 1e-14);
        assert_relative_eq!(mu, r.row_scale.clone() / r.cost_scale, max_relative = 1e-14);
        // the scaled box is D⁻¹ E
        let s = &r.problem.sets[0];
        for j in 0..3 {
            assert_relative_eq!(s.scale[j] * r.col_scale[j], 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn second_order_rows_share_a_factor() {
        let mut q = sample();
        q.cones = cone_layout(&[(ConeKind::SecondOrder, 2)]);
        let r = ruiz_equilibrate(&q, &RuizConfig::default()).unwrap();
        assert_eq!(r.row_scale[0], r.row_scale[1]);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = RuizConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(ruiz_equilibrate(&sample(), &cfg).is_err());
    }
}
