//! High-accuracy reference solutions for polyhedral problems.
//!
//! The problem is rewritten as `min ½ξᵀPξ + pᵀξ` subject to `Aₑξ = bₑ` and
//! `Aᵢξ ≤ bᵢ`. `quadprog` (Goldfarb-Idnani) finds the active set, then the
//! equality-constrained KKT system on that set is re-solved by LU with
//! iterative refinement and the result is checked against the original KKT
//! conditions.

use hypersphere::cones::{ConeKind, SetKind};
use hypersphere::{Finding, Qcp};
use nalgebra::{DMatrix, DVector};

use crate::error::{BenchError, Result};

/// Accepted original-problem KKT residual.
pub const REFERENCE_TOLERANCE: f64 = 1e-9;

const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub xi: DVector<f64>,
    /// Multipliers of `Gξ − g ∈ L`, in the sign convention of
    /// [`Qcp::kkt_residuals`].
    pub mu: DVector<f64>,
    pub kkt_residual: f64,
    pub active_constraints: usize,
}

/// Where a linear constraint row came from.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Origin {
    /// Cone row `i`; inequality rows are stored negated.
    Cone(usize),
    Set,
}

struct Rows {
    a: Vec<DVector<f64>>,
    b: Vec<f64>,
    origin: Vec<Origin>,
}

impl Rows {
    fn new() -> Self {
        Self {
            a: Vec::new(),
            b: Vec::new(),
            origin: Vec::new(),
        }
    }

    fn push(&mut self, a: DVector<f64>, b: f64, origin: Origin) {
        self.a.push(a);
        self.b.push(b);
        self.origin.push(origin);
    }

    fn unit(n: usize, i: usize, sign: f64) -> DVector<f64> {
        let mut e = DVector::zeros(n);
        e[i] = sign;
        e
    }
}

/// Splits the constraints into equality and inequality rows.
fn linear_rows(qcp: &Qcp) -> Result<(Rows, Rows)> {
    let n = qcp.num_vars();
    let mut eq = Rows::new();
    let mut ineq = Rows::new();
    for c in &qcp.cones {
        match c.kind {
            ConeKind::Zero => {
                for i in c.range() {
                    eq.push(qcp.constraints.row(i).transpose(), qcp.rhs[i], Origin::Cone(i));
                }
            }
            ConeKind::Nonnegative => {
                for i in c.range() {
                    ineq.push(-qcp.constraints.row(i).transpose(), -qcp.rhs[i], Origin::Cone(i));
                }
            }
            ConeKind::SecondOrder => {
                return Err(BenchError::Unsupported("second-order cone rows".into()));
            }
        }
    }
    for s in &qcp.sets {
        match &s.kind {
            SetKind::Free => {}
            SetKind::Box { lower, upper } => {
                for (k, ((l, u), sc)) in lower.iter().zip(upper).zip(&s.scale).enumerate() {
                    let (l, u, i) = (sc * l, sc * u, s.offset + k);
                    if l == u {
                        eq.push(Rows::unit(n, i, 1.0), u, Origin::Set);
                        continue;
                    }
                    if u.is_finite() {
                        ineq.push(Rows::unit(n, i, 1.0), u, Origin::Set);
                    }
                    if l.is_finite() {
                        ineq.push(Rows::unit(n, i, -1.0), -l, Origin::Set);
                    }
                }
            }
            SetKind::Halfspace { normal, offset } => {
                let mut a = DVector::zeros(n);
                for (k, (v, sc)) in normal.iter().zip(&s.scale).enumerate() {
                    a[s.offset + k] = v / sc;
                }
                ineq.push(a, *offset, Origin::Set);
            }
            SetKind::Ball { .. } | SetKind::SecondOrderCone => {
                return Err(BenchError::Unsupported(format!("{} set blocks", s.kind.name())));
            }
        }
    }
    Ok((eq, ineq))
}

fn row_major(rows: &[&DVector<f64>], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * n);
    for r in rows {
        out.extend(r.iter());
    }
    out
}

/// Solves the equality-constrained KKT system `[[P, Aᵀ], [A, 0]]`.
fn equality_kkt(
    p: &DMatrix<f64>,
    cost: &DVector<f64>,
    a: &[&DVector<f64>],
    b: &[f64],
) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = p.nrows();
    let k = a.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(p);
    for (j, row) in a.iter().enumerate() {
        kkt.view_mut((n + j, 0), (1, n)).copy_from(&row.transpose());
        kkt.view_mut((0, n + j), (n, 1)).copy_from(*row);
    }
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(&(-cost));
    for (j, v) in b.iter().enumerate() {
        rhs[n + j] = *v;
    }
    let lu = kkt.clone().lu();
    let mut sol = lu.solve(&rhs)?;
    for _ in 0..REFINEMENT_STEPS {
        let r = &rhs - &kkt * &sol;
        sol += lu.solve(&r)?;
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((sol.rows(0, n).into_owned(), sol.rows(n, k).into_owned()))
}

/// Cone multipliers from the multipliers of the active rows.
fn cone_multipliers(m: usize, origins: &[Origin], y: &DVector<f64>, eq_count: usize) -> DVector<f64> {
    let mut mu = DVector::zeros(m);
    for (j, o) in origins.iter().enumerate() {
        if let Origin::Cone(i) = o {
            // inequality rows were negated
            mu[*i] = if j < eq_count { y[j] } else { -y[j] };
        }
    }
    mu
}

pub fn reference_solve(qcp: &Qcp) -> Result<ReferenceSolution> {
    // preconditioner compatibility of the sets does not matter here
    let fatal: Vec<Finding> = hypersphere::validate(qcp)
        .into_iter()
        .filter(|f| f.is_fatal() && !matches!(f, Finding::IncompatibleScaling { .. }))
        .collect();
    if !fatal.is_empty() {
        return Err(hypersphere::Error::InvalidProblem(fatal).into());
    }
    let n = qcp.num_vars();
    let m = qcp.num_constraints();
    let (eq, ineq) = linear_rows(qcp)?;
    let p = qcp.hessian.to_dense();

    let rows: Vec<&DVector<f64>> = eq.a.iter().chain(&ineq.a).collect();
    let b: Vec<f64> = eq.b.iter().chain(&ineq.b).copied().collect();
    let mut qmat: Vec<f64> = p.transpose().iter().copied().collect();
    let first = quadprog::solve_qp(
        &mut qmat,
        qcp.cost.as_slice(),
        &row_major(&rows, n),
        &b,
        eq.a.len(),
        false,
    )
    .map_err(|e| BenchError::OracleFailed(format!("quadprog: {e:?}")))?;
    let x0 = DVector::from_vec(first.sol);

    // active set: equalities plus inequalities that are tight at the first solve
    let scale = 1.0 + x0.amax();
    let active: Vec<usize> = (0..rows.len())
        .filter(|&j| j < eq.a.len() || b[j] - rows[j].dot(&x0) <= 1e-9 * scale)
        .collect();
    let origins: Vec<Origin> = eq.origin.iter().chain(&ineq.origin).copied().collect();

    let polished = {
        let a: Vec<&DVector<f64>> = active.iter().map(|&j| rows[j]).collect();
        let bb: Vec<f64> = active.iter().map(|&j| b[j]).collect();
        equality_kkt(&p, &qcp.cost, &a, &bb).map(|(x, y)| {
            let o: Vec<Origin> = active.iter().map(|&j| origins[j]).collect();
            let mu = cone_multipliers(m, &o, &y, eq.a.len());
            (x, mu)
        })
    };

    let from_quadprog = {
        let y = DVector::from_vec(first.lagr);
        cone_multipliers(m, &origins, &y, eq.a.len())
    };
    let mut candidates = vec![(x0, from_quadprog)];
    if let Some(c) = polished {
        candidates.insert(0, c);
    }

    let mut best: Option<ReferenceSolution> = None;
    for (xi, mu) in candidates {
        let res = qcp.kkt_residuals(&xi, &mu)?.max();
        if best.as_ref().is_none_or(|b| res < b.kkt_residual) {
            best = Some(ReferenceSolution {
                xi,
                mu,
                kkt_residual: res,
                active_constraints: active.len(),
            });
        }
    }
    let best = best.expect("at least one candidate");
    if !(best.kkt_residual <= REFERENCE_TOLERANCE) {
        return Err(BenchError::OracleFailed(format!(
            "KKT residual {:.3e} exceeds {REFERENCE_TOLERANCE:e}",
            best.kkt_residual
        )));
    }
    Ok(best)
}
