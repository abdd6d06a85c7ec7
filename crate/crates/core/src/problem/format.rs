//! JSON problem files.
//!
//! Matrices are flattened row-major. Unbounded box entries are `null`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Qcp;
use crate::cones::{ConeBlock, ConeKind, SetBlock, SetKind};
use crate::error::{Error, Result};
use crate::linalg::StructuredSpdMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "P")]
    pub hessian: HessianSpec,
    pub p: Vec<f64>,
    #[serde(rename = "G")]
    pub constraints: Vec<f64>,
    pub g: Vec<f64>,
    pub cone_blocks: Vec<ConeSpec>,
    pub set_blocks: Vec<SetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HessianSpec {
    Diagonal {
        entries: Vec<f64>,
    },
    /// Each block is a row-major square matrix.
    BlockDiagonal {
        blocks: Vec<Vec<f64>>,
    },
    Dense {
        entries: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeTag {
    Zero,
    Nonnegative,
    SecondOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub tag: ConeTag,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum SetSpec {
    Free { dim: usize },
    Box { dim: usize, params: BoxParams },
    Ball { dim: usize, params: BallParams },
    Halfspace { dim: usize, params: HalfspaceParams },
    SecondOrderCone { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxParams {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceParams {
    pub normal: Vec<f64>,
    pub offset: f64,
}

fn square(entries: &[f64], what: &str) -> Result<DMatrix<f64>> {
    let k = (entries.len() as f64).sqrt().round() as usize;
    if k * k != entries.len() {
        return Err(Error::InvalidInput(format!(
            "{what} has {} entries, not a square count",
            entries.len()
        )));
    }
    Ok(DMatrix::from_row_slice(k, k, entries))
}

fn row_major(a: &DMatrix<f64>) -> Vec<f64> {
    a.transpose().as_slice().to_vec()
}

impl ProblemFile {
    pub fn from_qcp(qcp: &Qcp) -> Result<Self> {
        let hessian = match &qcp.hessian {
            StructuredSpdMatrix::Diagonal(d) => HessianSpec::Diagonal {
                entries: d.as_slice().to_vec(),
            },
            StructuredSpdMatrix::BlockDiagonal(blocks) => HessianSpec::BlockDiagonal {
                blocks: blocks.iter().map(row_major).collect(),
            },
            StructuredSpdMatrix::Dense(a) => HessianSpec::Dense { entries: row_major(a) },
        };
        let cone_blocks = qcp
            .cones
            .iter()
            .map(|c| ConeSpec {
                tag: match c.kind {
                    ConeKind::Zero => ConeTag::Zero,
                    ConeKind::Nonnegative => ConeTag::Nonnegative,
                    ConeKind::SecondOrder => ConeTag::SecondOrder,
                },
                dim: c.dim,
            })
            .collect();
        let mut set_blocks = Vec::with_capacity(qcp.sets.len());
        for s in &qcp.sets {
            if s.scale.iter().any(|&v| v != 1.0) {
                return Err(Error::InvalidInput(
                    "problem files describe unscaled set blocks only".into(),
                ));
            }
            let finite = |v: &f64| v.is_finite().then_some(*v);
            let dim = s.dim;
            set_blocks.push(match &s.kind {
                SetKind::Free => SetSpec::Free { dim },
                SetKind::Box { lower, upper } => SetSpec::Box {
                    dim,
                    params: BoxParams {
                        lower: lower.iter().map(finite).collect(),
                        upper: upper.iter().map(finite).collect(),
                    },
                },
                SetKind::Ball { radius } => SetSpec::Ball {
                    dim,
                    params: BallParams { radius: *radius },
                },
                SetKind::Halfspace { normal, offset } => SetSpec::Halfspace {
                    dim,
                    params: HalfspaceParams {
                        normal: normal.clone(),
                        offset: *offset,
                    },
                },
                SetKind::SecondOrderCone => SetSpec::SecondOrderCone { dim },
            });
        }
        Ok(Self {
            n: qcp.num_vars(),
            m: qcp.num_constraints(),
            hessian,
            p: qcp.cost.as_slice().to_vec(),
            constraints: row_major(&qcp.constraints),
            g: qcp.rhs.as_slice().to_vec(),
            cone_blocks,
            set_blocks,
        })
    }

    /// Builds the problem; block offsets follow the listed order.
    pub fn to_qcp(&self) -> Result<Qcp> {
        let (n, m) = (self.n, self.m);
        let len = |what: &str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "{what}: expected {expected} entries, found {found}"
                )))
            }
        };
        len("p", n, self.p.len())?;
        len("g", m, self.g.len())?;
        len("G", m * n, self.constraints.len())?;
        let hessian = match &self.hessian {
            HessianSpec::Diagonal { entries } => {
                len("P entries", n, entries.len())?;
                StructuredSpdMatrix::Diagonal(DVector::from_column_slice(entries))
            }
            HessianSpec::BlockDiagonal { blocks } => {
                StructuredSpdMatrix::BlockDiagonal(blocks.iter().map(|b| square(b, "P block")).collect::<Result<_>>()?)
            }
            HessianSpec::Dense { entries } => {
                len("P entries", n * n, entries.len())?;
                StructuredSpdMatrix::Dense(DMatrix::from_row_slice(n, n, entries))
            }
        };

        let mut offset = 0;
        let cones = self
            .cone_blocks
            .iter()
            .map(|c| {
                let block = ConeBlock {
                    kind: match c.tag {
                        ConeTag::Zero => ConeKind::Zero,
                        ConeTag::Nonnegative => ConeKind::Nonnegative,
                        ConeTag::SecondOrder => ConeKind::SecondOrder,
                    },
                    dim: c.dim,
                    offset,
                };
                offset += c.dim;
                block
            })
            .collect();

        let mut offset = 0;
        let mut sets = Vec::with_capacity(self.set_blocks.len());
        for spec in &self.set_blocks {
            let (kind, dim) = match spec {
                SetSpec::Free { dim } => (SetKind::Free, *dim),
                SetSpec::Box { dim, params } => {
                    len("box lower", *dim, params.lower.len())?;
                    len("box upper", *dim, params.upper.len())?;
                    let lower = params.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
                    let upper = params.upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
                    (SetKind::Box { lower, upper }, *dim)
                }
                SetSpec::Ball { dim, params } => (SetKind::Ball { radius: params.radius }, *dim),
                SetSpec::Halfspace { dim, params } => (
                    SetKind::Halfspace {
                        normal: params.normal.clone(),
                        offset: params.offset,
                    },
                    *dim,
                ),
                SetSpec::SecondOrderCone { dim } => (SetKind::SecondOrderCone, *dim),
            };
            sets.push(SetBlock::new(kind, offset, dim));
            offset += dim;
        }

        Ok(Qcp {
            hessian,
            cost: DVector::from_column_slice(&self.p),
            constraints: DMatrix::from_row_slice(m, n, &self.constraints),
            rhs: DVector::from_column_slice(&self.g),
            cones,
            sets,
        })
    }
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<Qcp> {
    let text = std::fs::read_to_string(path)?;
    let file: ProblemFile = serde_json::from_str(&text)?;
    file.to_qcp()
}

pub fn write_problem(path: impl AsRef<Path>, qcp: &Qcp) -> Result<()> {
    let file = ProblemFile::from_qcp(qcp)?;
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}
