//! Cone blocks for the conic constraint and separable sets for the variable
//! domain, with their closed-form Euclidean projections.
//!
//! Second-order blocks are stacked vector part first, scalar part last:
//! `(v, t)` with `‖v‖₂ ≤ t`.

use std::ops::Range;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

/// Relative tolerance used when deciding whether a scale vector is uniform.
const UNIFORM_SCALE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeKind {
    Zero,
    Nonnegative,
    SecondOrder,
}

impl ConeKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Nonnegative => "nonnegative",
            Self::SecondOrder => "second_order",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub dim: usize,
    /// First row of this block in the stacked constraint vector.
    pub offset: usize,
}

impl ConeBlock {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.dim
    }

    pub fn check(&self) -> std::result::Result<(), String> {
        if self.kind == ConeKind::SecondOrder && self.dim < 2 {
            return Err(format!(
                "second-order cone block at row {} has dimension {} < 2",
                self.offset, self.dim
            ));
        }
        Ok(())
    }
}

/// Lays out cone blocks contiguously from row 0.
pub fn cone_layout(blocks: &[(ConeKind, usize)]) -> Vec<ConeBlock> {
    let mut offset = 0;
    blocks
        .iter()
        .map(|&(kind, dim)| {
            let block = ConeBlock { kind, dim, offset };
            offset += dim;
            block
        })
        .collect()
}

/// Checks that `ranges`, in order, tile `0..total` without gaps or overlap.
pub fn check_partition<I>(ranges: I, total: usize) -> std::result::Result<(), String>
where
    I: IntoIterator<Item = Range<usize>>,
{
    let mut next = 0;
    for (i, r) in ranges.into_iter().enumerate() {
        if r.start != next {
            return Err(format!(
                "block {i} starts at {} but the previous block ended at {next}",
                r.start
            ));
        }
        next = r.end;
    }
    if next != total {
        return Err(format!("blocks cover {next} entries, expected {total}"));
    }
    Ok(())
}

fn project_soc_slice(x: &mut [f64]) {
    let (v, t) = x.split_at_mut(x.len() - 1);
    let t = &mut t[0];
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nv <= *t {
        return;
    }
    if nv <= -*t {
        v.fill(0.0);
        *t = 0.0;
        return;
    }
    let a = 0.5 * (nv + *t);
    let s = a / nv;
    v.iter_mut().for_each(|vi| *vi *= s);
    *t = a;
}

/// Projects `x` onto the cone `kind` in place.
pub fn project_cone_slice(kind: ConeKind, x: &mut [f64]) {
    match kind {
        ConeKind::Zero => x.fill(0.0),
        ConeKind::Nonnegative => x.iter_mut().for_each(|v| *v = v.max(0.0)),
        ConeKind::SecondOrder => project_soc_slice(x),
    }
}

/// Projects `x` onto the polar of the cone `kind` in place, as `x − Π(x)`.
pub fn project_polar_slice(kind: ConeKind, x: &mut [f64]) {
    match kind {
        ConeKind::Zero => {}
        ConeKind::Nonnegative => x.iter_mut().for_each(|v| *v = v.min(0.0)),
        ConeKind::SecondOrder => {
            let mut p = x.to_vec();
            project_soc_slice(&mut p);
            x.iter_mut().zip(p).for_each(|(xi, pi)| *xi -= pi);
        }
    }
}

pub fn project_cone(block: &ConeBlock, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("cone projection", block.dim, x.len())?;
    let mut out = x.clone();
    project_cone_slice(block.kind, out.as_mut_slice());
    Ok(out)
}

pub fn project_polar(block: &ConeBlock, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("polar projection", block.dim, x.len())?;
    let mut out = x.clone();
    project_polar_slice(block.kind, out.as_mut_slice());
    Ok(out)
}

/// Projects a stacked vector onto the product of `blocks`.
pub fn project_onto_cones(blocks: &[ConeBlock], v: &mut DVector<f64>) {
    for b in blocks {
        project_cone_slice(b.kind, &mut v.as_mut_slice()[b.range()]);
    }
}

/// Projects a stacked vector onto the product of the polar cones of `blocks`.
pub fn project_onto_polars(blocks: &[ConeBlock], v: &mut DVector<f64>) {
    for b in blocks {
        project_polar_slice(b.kind, &mut v.as_mut_slice()[b.range()]);
    }
}

/// Largest per-block distance `‖Π(v) − v‖₂` of `v` from the cone product.
pub fn cone_violation(blocks: &[ConeBlock], v: &DVector<f64>) -> f64 {
    blocks
        .iter()
        .map(|b| {
            let mut p = v.as_slice()[b.range()].to_vec();
            project_cone_slice(b.kind, &mut p);
            p.iter()
                .zip(&v.as_slice()[b.range()])
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    Free,
    /// Element-wise bounds; infinite bounds are allowed.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Euclidean ball centred at the origin.
    Ball {
        radius: f64,
    },
    /// `{x : normalᵀ x ≤ offset}`.
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    SecondOrderCone,
}

impl SetKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Free => "free",
            Self::Box { .. } => "box",
            Self::Ball { .. } => "ball",
            Self::Halfspace { .. } => "halfspace",
            Self::SecondOrderCone => "second_order_cone",
        }
    }
}

/// A separable set acting on `offset..offset + dim`, seen through a positive
/// diagonal scaling: the block represents `{z : z ⊘ scale ∈ base set}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetBlock {
    pub kind: SetKind,
    pub dim: usize,
    pub offset: usize,
    pub scale: Vec<f64>,
}

impl SetBlock {
    pub fn new(kind: SetKind, offset: usize, dim: usize) -> Self {
        Self {
            kind,
            dim,
            offset,
            scale: vec![1.0; dim],
        }
    }

    pub fn free(offset: usize, dim: usize) -> Self {
        Self::new(SetKind::Free, offset, dim)
    }

    pub fn bounded(offset: usize, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let dim = lower.len();
        Self::new(SetKind::Box { lower, upper }, offset, dim)
    }

    pub fn ball(offset: usize, dim: usize, radius: f64) -> Self {
        Self::new(SetKind::Ball { radius }, offset, dim)
    }

    pub fn halfspace(offset: usize, normal: Vec<f64>, bound: f64) -> Self {
        let dim = normal.len();
        Self::new(SetKind::Halfspace { normal, offset: bound }, offset, dim)
    }

    pub fn second_order_cone(offset: usize, dim: usize) -> Self {
        Self::new(SetKind::SecondOrderCone, offset, dim)
    }

    pub fn with_scale(mut self, scale: Vec<f64>) -> Self {
        self.scale = scale;
        self
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.dim
    }

    /// Checks the block's own invariants (not scaling compatibility).
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.scale.len() != self.dim {
            return Err(format!(
                "scale has length {} but block dimension is {}",
                self.scale.len(),
                self.dim
            ));
        }
        if self.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err("scale entries must be finite and positive".into());
        }
        match &self.kind {
            SetKind::Free => {}
            SetKind::Box { lower, upper } => {
                if lower.len() != self.dim || upper.len() != self.dim {
                    return Err("box bounds do not match the block dimension".into());
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err("box requires lower <= upper element-wise".into());
                }
            }
            SetKind::Ball { radius } => {
                if !(*radius > 0.0) {
                    return Err("ball radius must be positive".into());
                }
            }
            SetKind::Halfspace { normal, offset } => {
                if normal.len() != self.dim {
                    return Err("halfspace normal does not match the block dimension".into());
                }
                if normal.iter().all(|a| *a == 0.0) {
                    return Err("halfspace normal must be nonzero".into());
                }
                if !offset.is_finite() {
                    return Err("halfspace offset must be finite".into());
                }
            }
            SetKind::SecondOrderCone => {
                if self.dim < 2 {
                    return Err("second-order cone set needs dimension >= 2".into());
                }
            }
        }
        Ok(())
    }

    /// The common scale factor, if every entry of `scale` agrees.
    pub fn uniform_scale(&self) -> Option<f64> {
        let first = *self.scale.first()?;
        self.scale
            .iter()
            .all(|s| (s - first).abs() <= UNIFORM_SCALE_TOL * first)
            .then_some(first)
    }

    /// Whether the scaled set still has a closed-form projection: boxes,
    /// halfspaces and free blocks accept any positive diagonal scale, balls and
    /// second-order cones need a uniform one.
    pub fn check_scaling(&self) -> Result<()> {
        match self.kind {
            SetKind::Ball { .. } | SetKind::SecondOrderCone if self.uniform_scale().is_none() && self.dim > 0 => {
                Err(self.scaling_error())
            }
            _ => Ok(()),
        }
    }

    /// Projects `x` (the slice for this block) onto the scaled set in place.
    pub fn project_slice(&self, x: &mut [f64]) -> Result<()> {
        check_dim("set projection", self.dim, x.len())?;
        match &self.kind {
            SetKind::Free => {}
            SetKind::Box { lower, upper } => {
                for (((xi, l), u), s) in x.iter_mut().zip(lower).zip(upper).zip(&self.scale) {
                    *xi = xi.clamp(s * l, s * u);
                }
            }
            SetKind::Ball { radius } => {
                let c = self.uniform_scale().ok_or_else(|| self.scaling_error())?;
                let r = c * radius;
                let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm > r {
                    let f = r / norm;
                    x.iter_mut().for_each(|v| *v *= f);
                }
            }
            SetKind::Halfspace { normal, offset } => {
                // scaled normal a ⊘ s
                let mut dot = 0.0;
                let mut nsq = 0.0;
                for ((xi, a), s) in x.iter().zip(normal).zip(&self.scale) {
                    let a = a / s;
                    dot += a * xi;
                    nsq += a * a;
                }
                let excess = dot - offset;
                if excess > 0.0 {
                    let f = excess / nsq;
                    for ((xi, a), s) in x.iter_mut().zip(normal).zip(&self.scale) {
                        *xi -= f * a / s;
                    }
                }
            }
            SetKind::SecondOrderCone => {
                if self.dim > 0 && self.uniform_scale().is_none() {
                    return Err(self.scaling_error());
                }
                project_soc_slice(x);
            }
        }
        Ok(())
    }

    fn scaling_error(&self) -> Error {
        Error::IncompatibleScaling {
            offset: self.offset,
            reason: format!("{} block needs a uniform scale", self.kind.name()),
        }
    }
}

pub fn project_set(block: &SetBlock, x: &DVector<f64>) -> Result<DVector<f64>> {
    let mut out = x.clone();
    block.project_slice(out.as_mut_slice())?;
    Ok(out)
}

/// Projects a stacked vector onto the product of `blocks`.
pub fn project_onto_sets(blocks: &[SetBlock], x: &mut DVector<f64>) -> Result<()> {
    for b in blocks {
        b.project_slice(&mut x.as_mut_slice()[b.range()])?;
    }
    Ok(())
}

/// Largest per-block distance of `x` from the set product.
pub fn set_violation(blocks: &[SetBlock], x: &DVector<f64>) -> Result<f64> {
    let mut p = x.clone();
    project_onto_sets(blocks, &mut p)?;
    Ok(blocks
        .iter()
        .map(|b| (p.rows(b.offset, b.dim) - x.rows(b.offset, b.dim)).norm())
        .fold(0.0, f64::max))
}
