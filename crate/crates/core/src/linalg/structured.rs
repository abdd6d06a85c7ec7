//! Symmetric positive definite matrices with exploitable structure, and their
//! upper-triangular Cholesky factors.
//!
//! Diagonal and block-diagonal matrices factor in closed form (element-wise
//! square roots, or one small dense factorization per block), which is what
//! makes the change of variables `z = R ξ` cheap enough to redo whenever the
//! objective data changes.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Pivots at or below this fraction of the largest diagonal entry are
/// treated as a loss of positive definiteness.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum StructuredSpdMatrix {
    Diagonal(DVector<f64>),
    /// Dense square blocks placed along the diagonal, in order.
    BlockDiagonal(Vec<DMatrix<f64>>),
    Dense(DMatrix<f64>),
}

impl StructuredSpdMatrix {
    pub fn identity(n: usize) -> Self {
        Self::Diagonal(DVector::from_element(n, 1.0))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(d) => d.len(),
            Self::BlockDiagonal(blocks) => blocks.iter().map(|b| b.nrows()).sum(),
            Self::Dense(a) => a.nrows(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Diagonal(_) => "diagonal",
            Self::BlockDiagonal(_) => "block_diagonal",
            Self::Dense(_) => "dense",
        }
    }

    /// Row ranges of the diagonal blocks. A diagonal matrix has one 1×1 block
    /// per entry and a dense matrix a single block.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        match self {
            Self::Diagonal(d) => (0..d.len()).map(|i| i..i + 1).collect(),
            Self::BlockDiagonal(blocks) => block_ranges(blocks),
            #[allow(clippy::single_range_in_vec_init)]
            Self::Dense(a) => vec![0..a.nrows()],
        }
    }

    pub fn diagonal(&self) -> DVector<f64> {
        match self {
            Self::Diagonal(d) => d.clone(),
            Self::BlockDiagonal(blocks) => DVector::from_iterator(
                self.dim(),
                blocks.iter().flat_map(|b| b.diagonal().data.as_vec().clone()),
            ),
            Self::Dense(a) => a.diagonal(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Diagonal(d) => DMatrix::from_diagonal(d),
            Self::BlockDiagonal(blocks) => {
                let n = self.dim();
                let mut out = DMatrix::zeros(n, n);
                for (block, range) in blocks.iter().zip(block_ranges(blocks)) {
                    out.view_mut((range.start, range.start), (range.len(), range.len()))
                        .copy_from(block);
                }
                out
            }
            Self::Dense(a) => a.clone(),
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("matrix-vector product", self.dim(), x.len())?;
        Ok(match self {
            Self::Diagonal(d) => d.component_mul(x),
            Self::BlockDiagonal(blocks) => {
                let mut out = DVector::zeros(x.len());
                for (block, range) in blocks.iter().zip(block_ranges(blocks)) {
                    let y = block * x.rows(range.start, range.len());
                    out.rows_mut(range.start, range.len()).copy_from(&y);
                }
                out
            }
            Self::Dense(a) => a * x,
        })
    }

    /// Writes `self * x` into `out` without allocating.
    pub fn mul_vec_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            Self::Diagonal(d) => {
                for ((o, di), xi) in out.iter_mut().zip(d.iter()).zip(x.iter()) {
                    *o = di * xi;
                }
            }
            Self::BlockDiagonal(blocks) => {
                let mut start = 0;
                for block in blocks {
                    let k = block.nrows();
                    let mut o = out.rows_mut(start, k);
                    o.gemv(1.0, block, &x.rows(start, k), 0.0);
                    start += k;
                }
            }
            Self::Dense(a) => out.gemv(1.0, a, x, 0.0),
        }
    }

    /// Symmetric diagonal rescaling `c · diag(d) · self · diag(d)`, which keeps
    /// the structure kind.
    pub fn congruence_scaled(&self, d: &DVector<f64>, c: f64) -> Self {
        match self {
            Self::Diagonal(diag) => Self::Diagonal(diag.component_mul(d).component_mul(d) * c),
            Self::BlockDiagonal(blocks) => Self::BlockDiagonal(
                blocks
                    .iter()
                    .zip(block_ranges(blocks))
                    .map(|(b, r)| scale_dense(b, &d.rows(r.start, r.len()).into_owned(), c))
                    .collect(),
            ),
            Self::Dense(a) => Self::Dense(scale_dense(a, d, c)),
        }
    }

    /// Largest absolute deviation from symmetry, relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let check = |a: &DMatrix<f64>| {
            let scale = a.amax().max(f64::MIN_POSITIVE);
            (a - a.transpose()).amax() / scale
        };
        match self {
            Self::Diagonal(_) => 0.0,
            Self::BlockDiagonal(blocks) => blocks.iter().map(check).fold(0.0, f64::max),
            Self::Dense(a) => check(a),
        }
    }

    /// Largest eigenvalue. Closed form for diagonal matrices; for blocks a
    /// Cholesky-free power iteration on each block.
    pub fn largest_eigenvalue(&self) -> f64 {
        match self {
            Self::Diagonal(d) => d.max(),
            Self::BlockDiagonal(blocks) => blocks.iter().map(dense_largest_eigenvalue).fold(0.0, f64::max),
            Self::Dense(a) => dense_largest_eigenvalue(a),
        }
    }
}

fn block_ranges(blocks: &[DMatrix<f64>]) -> Vec<Range<usize>> {
    let mut start = 0;
    blocks
        .iter()
        .map(|b| {
            let r = start..start + b.nrows();
            start = r.end;
            r
        })
        .collect()
}

fn scale_dense(a: &DMatrix<f64>, d: &DVector<f64>, c: f64) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| c * d[i] * a[(i, j)] * d[j])
}

fn dense_largest_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut w = DVector::from_element(n, 1.0);
    let mut est = w.norm();
    for _ in 0..10_000 {
        let next = (a * &w) / est;
        let next_est = next.norm();
        if next_est < 1e-300 {
            return 0.0;
        }
        let done = (next_est - est).abs() <= 1e-12 * next_est.max(est);
        w = next;
        est = next_est;
        if done {
            break;
        }
    }
    est
}

/// Upper-triangular `R` with `Rᵀ R = P`, stored with the same structure as `P`.
#[derive(Debug, Clone, PartialEq)]
pub enum CholeskyFactor {
    Diagonal(DVector<f64>),
    BlockDiagonal(Vec<DMatrix<f64>>),
    Dense(DMatrix<f64>),
}

/// Factors `p` as `Rᵀ R` with `R` upper triangular. Only the upper triangle
/// of each dense block is read.
pub fn cholesky(p: &StructuredSpdMatrix) -> Result<CholeskyFactor> {
    let max_diag = p.diagonal().iter().fold(0.0_f64, |acc, v| acc.max(*v));
    let tol = PIVOT_TOLERANCE * max_diag;
    match p {
        StructuredSpdMatrix::Diagonal(d) => {
            let mut r = d.clone();
            for (index, v) in r.iter_mut().enumerate() {
                if !(*v > tol) {
                    return Err(Error::NotPositiveDefinite { index, pivot: *v });
                }
                *v = v.sqrt();
            }
            Ok(CholeskyFactor::Diagonal(r))
        }
        StructuredSpdMatrix::BlockDiagonal(blocks) => {
            let mut out = Vec::with_capacity(blocks.len());
            let mut offset = 0;
            for block in blocks {
                out.push(dense_upper_cholesky(block, tol, offset)?);
                offset += block.nrows();
            }
            Ok(CholeskyFactor::BlockDiagonal(out))
        }
        StructuredSpdMatrix::Dense(a) => Ok(CholeskyFactor::Dense(dense_upper_cholesky(a, tol, 0)?)),
    }
}

fn dense_upper_cholesky(a: &DMatrix<f64>, tol: f64, offset: usize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    check_dim("square block", n, a.ncols())?;
    let mut r = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= r[(k, j)] * r[(k, j)];
        }
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite {
                index: offset + j,
                pivot,
            });
        }
        let rjj = pivot.sqrt();
        r[(j, j)] = rjj;
        for i in j + 1..n {
            let mut s = a[(j, i)];
            for k in 0..j {
                s -= r[(k, j)] * r[(k, i)];
            }
            r[(j, i)] = s / rjj;
        }
    }
    Ok(r)
}

/// Solves `R x = b` in place by back substitution.
fn back_substitute(r: &DMatrix<f64>, x: &mut [f64]) {
    let n = r.nrows();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= r[(i, k)] * x[k];
        }
        x[i] = s / r[(i, i)];
    }
}

/// Solves `Rᵀ x = b` in place by forward substitution.
fn forward_substitute_transpose(r: &DMatrix<f64>, x: &mut [f64]) {
    let n = r.nrows();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= r[(k, i)] * x[k];
        }
        x[i] = s / r[(i, i)];
    }
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(d) => d.len(),
            Self::BlockDiagonal(blocks) => blocks.iter().map(|b| b.nrows()).sum(),
            Self::Dense(r) => r.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Diagonal(d) => DMatrix::from_diagonal(d),
            Self::BlockDiagonal(blocks) => StructuredSpdMatrix::BlockDiagonal(blocks.clone()).to_dense(),
            Self::Dense(r) => r.clone(),
        }
    }

    pub fn diagonal(&self) -> DVector<f64> {
        match self {
            Self::Diagonal(d) => d.clone(),
            Self::BlockDiagonal(blocks) => StructuredSpdMatrix::BlockDiagonal(blocks.clone()).diagonal(),
            Self::Dense(r) => r.diagonal(),
        }
    }

    /// `R x`.
    pub fn mul_vec(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("factor product", self.dim(), x.len())?;
        Ok(match self {
            Self::Diagonal(d) => d.component_mul(x),
            Self::BlockDiagonal(blocks) => StructuredSpdMatrix::BlockDiagonal(blocks.clone()).mul_vec(x)?,
            Self::Dense(r) => r * x,
        })
    }

    /// Applies `R⁻¹`.
    pub fn solve_upper(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("solve_upper", self.dim(), b.len())?;
        let mut x = b.clone();
        match self {
            Self::Diagonal(d) => x.component_div_assign(d),
            Self::BlockDiagonal(blocks) => {
                let mut start = 0;
                for r in blocks {
                    let k = r.nrows();
                    back_substitute(r, &mut x.as_mut_slice()[start..start + k]);
                    start += k;
                }
            }
            Self::Dense(r) => back_substitute(r, x.as_mut_slice()),
        }
        Ok(x)
    }

    /// Applies `R⁻ᵀ`.
    pub fn solve_upper_transpose(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("solve_upper_transpose", self.dim(), b.len())?;
        let mut x = b.clone();
        match self {
            Self::Diagonal(d) => x.component_div_assign(d),
            Self::BlockDiagonal(blocks) => {
                let mut start = 0;
                for r in blocks {
                    let k = r.nrows();
                    forward_substitute_transpose(r, &mut x.as_mut_slice()[start..start + k]);
                    start += k;
                }
            }
            Self::Dense(r) => forward_substitute_transpose(r, x.as_mut_slice()),
        }
        Ok(x)
    }

    /// Right-multiplies `a` by `R⁻¹` through one transposed triangular solve
    /// per row; no inverse is formed.
    pub fn right_solve(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim("right_solve", self.dim(), a.ncols())?;
        let mut out = a.clone();
        if let Self::Diagonal(d) = self {
            for (mut col, dj) in out.column_iter_mut().zip(d.iter()) {
                col /= *dj;
            }
            return Ok(out);
        }
        for i in 0..a.nrows() {
            let row = a.row(i).transpose();
            let solved = self.solve_upper_transpose(&row)?;
            out.set_row(i, &solved.transpose());
        }
        Ok(out)
    }

    /// The diagonal of `R` over `range`, provided `R` couples none of those
    /// coordinates to any other coordinate. On such a range `R` acts as a
    /// positive diagonal scaling.
    pub fn decoupled_scales(&self, range: Range<usize>) -> Option<DVector<f64>> {
        match self {
            Self::Diagonal(d) => Some(d.rows(range.start, range.len()).into_owned()),
            _ => {
                let r = self.to_dense();
                let n = r.nrows();
                for i in range.clone() {
                    for j in 0..n {
                        if j != i && (r[(i, j)] != 0.0 || r[(j, i)] != 0.0) {
                            return None;
                        }
                    }
                }
                Some(r.diagonal().rows(range.start, range.len()).into_owned())
            }
        }
    }
}
