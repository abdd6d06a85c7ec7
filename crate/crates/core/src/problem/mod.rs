//! The strongly convex quadratic cone program
//!
//! ```text
//! minimize    ½ ξᵀ P ξ + pᵀ ξ
//! subject to  G ξ − g ∈ L
//!             ξ ∈ E
//! ```
//!
//! with `L` a product of cone blocks and `E` a product of separable sets.

mod format;
mod kkt;

use std::fmt;

use nalgebra::{DMatrix, DVector};

pub use format::{read_problem, write_problem, ProblemFile};
pub use kkt::{assemble_kkt, kappa_at_optimum, kkt_condition_number, kkt_spectrum, optimal_lambda, KktDiagnostics};

use crate::cones::{check_partition, project_onto_cones, project_onto_sets, ConeBlock, SetBlock};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{cholesky, StructuredSpdMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Qcp {
    /// Objective Hessian `P` (n × n).
    pub hessian: StructuredSpdMatrix,
    /// Linear objective term `p`.
    pub cost: DVector<f64>,
    /// Constraint matrix `G` (m × n).
    pub constraints: DMatrix<f64>,
    /// Constraint offset `g`.
    pub rhs: DVector<f64>,
    pub cones: Vec<ConeBlock>,
    pub sets: Vec<SetBlock>,
}

/// One problem with a [`Qcp`], as reported by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    DimensionMismatch {
        what: String,
    },
    NonContiguousBlocks {
        what: String,
    },
    InvalidBlock {
        what: String,
    },
    NotSymmetric {
        asymmetry: f64,
    },
    NotPositiveDefinite {
        index: usize,
    },
    IncompatibleScaling {
        offset: usize,
    },
    NonFinite {
        what: String,
    },
    /// `n > m` is needed for the KKT spectrum formulas; solving still works.
    TooFewVariables {
        n: usize,
        m: usize,
    },
}

impl Finding {
    pub fn is_fatal(&self) -> bool {
        !matches!(self, Self::TooFewVariables { .. })
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { what } => write!(f, "dimension mismatch: {what}"),
            Self::NonContiguousBlocks { what } => write!(f, "blocks do not partition: {what}"),
            Self::InvalidBlock { what } => write!(f, "invalid block: {what}"),
            Self::NotSymmetric { asymmetry } => {
                write!(f, "hessian is not symmetric (relative asymmetry {asymmetry:e})")
            }
            Self::NotPositiveDefinite { index } => write!(f, "hessian is not positive definite (pivot {index})"),
            Self::IncompatibleScaling { offset } => {
                write!(
                    f,
                    "set block at offset {offset} has no closed-form projection after the change of variables"
                )
            }
            Self::NonFinite { what } => write!(f, "non-finite data in {what}"),
            Self::TooFewVariables { n, m } => write!(f, "n = {n} is not larger than m = {m}"),
        }
    }
}

impl Qcp {
    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self, xi: &DVector<f64>) -> Result<f64> {
        let pxi = self.hessian.mul_vec(xi)?;
        Ok(0.5 * xi.dot(&pxi) + self.cost.dot(xi))
    }

    /// Natural-map residuals of the optimality conditions at `(ξ, μ)`.
    ///
    /// Stationarity is `‖ξ − Π_E(ξ − (Pξ + p + Gᵀμ))‖`, which vanishes exactly
    /// when `−(Pξ + p + Gᵀμ)` lies in the normal cone of `E` at `ξ ∈ E`; for a
    /// free domain it is `‖Pξ + p + Gᵀμ‖`. The cone residual is
    /// `‖s − Π_L(s + μ)‖` with `s = Gξ − g`, which vanishes exactly when
    /// `s ∈ L`, `μ ∈ L°` and `sᵀμ = 0`.
    pub fn kkt_residuals(&self, xi: &DVector<f64>, mu: &DVector<f64>) -> Result<KktResiduals> {
        check_dim("primal point", self.num_vars(), xi.len())?;
        check_dim("dual point", self.num_constraints(), mu.len())?;
        let grad = self.hessian.mul_vec(xi)? + &self.cost + self.constraints.tr_mul(mu);
        let mut moved = xi - &grad;
        project_onto_sets(&self.sets, &mut moved)?;
        let stationarity = (xi - moved).norm();

        let slack = &self.constraints * xi - &self.rhs;
        let mut shifted = &slack + mu;
        project_onto_cones(&self.cones, &mut shifted);
        let cone = (slack - shifted).norm();

        let mut projected = xi.clone();
        project_onto_sets(&self.sets, &mut projected)?;
        let domain = (xi - projected).norm();

        Ok(KktResiduals {
            stationarity,
            cone,
            domain,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    /// Primal cone feasibility, dual cone feasibility and complementarity.
    pub cone: f64,
    /// Distance of `ξ` from `E`.
    pub domain: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.cone).max(self.domain)
    }
}

/// Collects every structural problem with `qcp`. An empty list means the
/// preconditioning pipeline can run.
pub fn validate(qcp: &Qcp) -> Vec<Finding> {
    let mut findings = Vec::new();
    let n = qcp.num_vars();
    let m = qcp.num_constraints();

    let mut dims = |what: &str, expected: usize, found: usize| {
        if expected != found {
            findings.push(Finding::DimensionMismatch {
                what: format!("{what}: expected {expected}, found {found}"),
            });
        }
    };
    dims("hessian dimension", n, qcp.hessian.dim());
    dims("constraint matrix rows", m, qcp.constraints.nrows());
    dims("constraint matrix columns", n, qcp.constraints.ncols());
    if let StructuredSpdMatrix::BlockDiagonal(blocks) = &qcp.hessian {
        for (i, b) in blocks.iter().enumerate() {
            dims(&format!("hessian block {i} columns"), b.nrows(), b.ncols());
        }
    }
    if let StructuredSpdMatrix::Dense(a) = &qcp.hessian {
        dims("hessian columns", a.nrows(), a.ncols());
    }

    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    for (what, ok) in [
        ("cost", finite(qcp.cost.as_slice())),
        ("constraint matrix", finite(qcp.constraints.as_slice())),
        ("constraint offset", finite(qcp.rhs.as_slice())),
        ("hessian", finite(qcp.hessian.to_dense().as_slice())),
    ] {
        if !ok {
            findings.push(Finding::NonFinite { what: what.into() });
        }
    }

    if let Err(what) = check_partition(qcp.cones.iter().map(ConeBlock::range), m) {
        findings.push(Finding::NonContiguousBlocks {
            what: format!("cone blocks: {what}"),
        });
    }
    if let Err(what) = check_partition(qcp.sets.iter().map(SetBlock::range), n) {
        findings.push(Finding::NonContiguousBlocks {
            what: format!("set blocks: {what}"),
        });
    }
    for c in &qcp.cones {
        if let Err(what) = c.check() {
            findings.push(Finding::InvalidBlock { what });
        }
    }
    for s in &qcp.sets {
        if let Err(what) = s.check() {
            findings.push(Finding::InvalidBlock {
                what: format!("set block at offset {}: {what}", s.offset),
            });
        }
    }

    if findings.iter().any(|f| matches!(f, Finding::DimensionMismatch { .. })) {
        return findings;
    }

    let asymmetry = qcp.hessian.asymmetry();
    if asymmetry > 1e-12 {
        findings.push(Finding::NotSymmetric { asymmetry });
    }
    match cholesky(&qcp.hessian) {
        Ok(factor) => {
            let sets_ok = findings
                .iter()
                .all(|f| !matches!(f, Finding::NonContiguousBlocks { .. }));
            if sets_ok {
                for s in &qcp.sets {
                    if let Err(Error::IncompatibleScaling { offset, .. }) = crate::precond::scaled_set(s, &factor) {
                        findings.push(Finding::IncompatibleScaling { offset });
                    }
                }
            }
        }
        Err(Error::NotPositiveDefinite { index, .. }) => findings.push(Finding::NotPositiveDefinite { index }),
        Err(_) => {}
    }

    if n <= m {
        findings.push(Finding::TooFewVariables { n, m });
    }
    findings
}

/// Like [`validate`], but fails on the first fatal finding set.
pub fn ensure_valid(qcp: &Qcp) -> Result<()> {
    let fatal: Vec<_> = validate(qcp).into_iter().filter(Finding::is_fatal).collect();
    if fatal.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidProblem(fatal))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{cone_layout, ConeKind};
    use nalgebra::{dmatrix, dvector};

    /// Two-step double integrator in one axis: x₂ = A x₁ + B u₁.
    fn double_integrator() -> Qcp {
        let dt = 0.1;
        // variables: x₁ (2), x₂ (2), u₁ (1) → n = 5, m = 2
        let constraints = dmatrix![
            -1.0, -dt, 1.0, 0.0, -0.5 * dt * dt;
            0.0, -1.0, 0.0, 1.0, -dt
        ];
        Qcp {
            hessian: StructuredSpdMatrix::Diagonal(dvector![1.0, 1.0, 1.0, 1.0, 0.1]),
            cost: DVector::zeros(5),
            constraints,
            rhs: DVector::zeros(2),
            cones: cone_layout(&[(ConeKind::Zero, 2)]),
            sets: vec![
                SetBlock::bounded(0, vec![1.0, 0.0], vec![1.0, 0.0]),
                SetBlock::bounded(2, vec![-10.0; 2], vec![10.0; 2]),
                SetBlock::bounded(4, vec![-1.0], vec![1.0]),
            ],
        }
    }

    #[test]
    fn well_formed_instance_is_clean() {
        assert!(validate(&double_integrator()).is_empty());
        assert!(ensure_valid(&double_integrator()).is_ok());
    }

    #[test]
    fn zero_diagonal_is_not_positive_definite() {
        let mut q = double_integrator();
        q.hessian = StructuredSpdMatrix::Diagonal(dvector![1.0, 0.0, 1.0, 1.0, 0.1]);
        assert!(validate(&q).contains(&Finding::NotPositiveDefinite { index: 1 }));
        assert!(matches!(ensure_valid(&q), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn ball_with_nonuniform_factor_is_incompatible() {
        let mut q = double_integrator();
        q.sets = vec![SetBlock::ball(0, 4, 20.0), SetBlock::free(4, 1)];
        // diag(1, 4, 1, 1) on the ball coordinates gives R = diag(1, 2, 1, 1)
        q.hessian = StructuredSpdMatrix::Diagonal(dvector![1.0, 4.0, 1.0, 1.0, 0.1]);
        assert_eq!(validate(&q), vec![Finding::IncompatibleScaling { offset: 0 }]);
        q.hessian = StructuredSpdMatrix::Diagonal(dvector![4.0, 4.0, 4.0, 4.0, 0.1]);
        assert!(validate(&q).is_empty());
    }

    #[test]
    fn structural_findings() {
        let mut q = double_integrator();
        q.cones = vec![ConeBlock {
            kind: ConeKind::Zero,
            dim: 1,
            offset: 1,
        }];
        q.sets.pop();
        let findings = validate(&q);
        assert_eq!(
            findings
                .iter()
                .filter(|f| matches!(f, Finding::NonContiguousBlocks { .. }))
                .count(),
            2
        );

        let mut q = double_integrator();
        q.cost = DVector::zeros(4);
        assert!(matches!(validate(&q)[0], Finding::DimensionMismatch { .. }));

        let mut q = double_integrator();
        q.hessian = StructuredSpdMatrix::Dense(dmatrix![
            1.0, 0.5, 0.0, 0.0, 0.0;
            0.0, 1.0, 0.0, 0.0, 0.0;
            0.0, 0.0, 1.0, 0.0, 0.0;
            0.0, 0.0, 0.0, 1.0, 0.0;
            0.0, 0.0, 0.0, 0.0, 1.0
        ]);
        q.sets = vec![SetBlock::free(0, 5)];
        assert!(matches!(validate(&q)[0], Finding::NotSymmetric { .. }));

        let mut q = double_integrator();
        q.rhs[0] = f64::NAN;
        assert!(validate(&q).contains(&Finding::NonFinite {
            what: "constraint offset".into()
        }));
    }

    #[test]
    fn few_variables_is_not_fatal() {
        let q = Qcp {
            hessian: StructuredSpdMatrix::identity(1),
            cost: dvector![0.0],
            constraints: dmatrix![1.0],
            rhs: dvector![1.0],
            cones: cone_layout(&[(ConeKind::Zero, 1)]),
            sets: vec![SetBlock::free(0, 1)],
        };
        let findings = validate(&q);
        assert_eq!(findings, vec![Finding::TooFewVariables { n: 1, m: 1 }]);
        assert!(ensure_valid(&q).is_ok());
    }

    #[test]
    fn residuals_vanish_at_the_optimum() {
        // min ½(x−2)² s.t. x ≤ 1 (box)  →  x = 1
        let q = Qcp {
            hessian: StructuredSpdMatrix::identity(1),
            cost: dvector![-2.0],
            constraints: DMatrix::zeros(0, 1),
            rhs: DVector::zeros(0),
            cones: vec![],
            sets: vec![SetBlock::bounded(0, vec![f64::NEG_INFINITY], vec![1.0])],
        };
        let r = q.kkt_residuals(&dvector![1.0], &DVector::zeros(0)).unwrap();
        assert!(r.max() < 1e-15);
        assert!(
            q.kkt_residuals(&dvector![0.5], &DVector::zeros(0))
                .unwrap()
                .stationarity
                > 0.4
        );
    }
}
