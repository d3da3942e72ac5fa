//! Critical points of `g_x(y) = ||x - y||^2` on concrete real varieties.
//!
//! A point `y` on the smooth part of a variety is critical for `x` when
//! `x - y` is normal to the variety at `y`. [`critical_set`] enumerates
//! such points on every stratum of the variety's singular-locus tree and
//! the nearest one gives `dist(x, C)`.
//!
//! Points of matrix varieties are `p x q` matrices flattened row-major;
//! points of tensor varieties are dense tensors flattened row-major.

mod probe;
mod quadric;
mod residual;
mod solve;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;

pub use probe::{
    lipschitz_probe, orbit_closure_check, pair_ratio, quadric_transversality, uniqueness_gap, uniqueness_probe,
    LipschitzReport, UniquenessReport, UniquenessRow, PROBE_STARTS,
};
pub use quadric::quadric_multipliers;
pub use residual::{constraint_residual, critical_residual, stationarity_fd};
pub use solve::critical_set;

/// Largest tangential residual accepted for a critical point.
pub const CRITICAL_TOL: f64 = 1e-8;
/// Largest constraint residual for a point to count as lying on the variety.
pub const ON_VARIETY_TOL: f64 = 1e-8;
/// Critical points closer than this are the same point.
pub const DEDUP_TOL: f64 = 1e-6;
/// A best point is unique when the runner-up is farther by more than this.
pub const UNIQUENESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VarietyKind {
    /// Column span of an `n x r` basis stored row-major.
    Subspace { n: usize, r: usize, basis: Vec<f64> },
    /// `{ y : sum a_i y_i^2 = 0 }`.
    DiagQuadricCone { coeffs: Vec<f64> },
    /// `p x q` matrices of rank at most `k`.
    MatrixRankAtMost { p: usize, q: usize, k: usize },
    /// Rank-one tensors of the given shape (including zero).
    TensorRankOne { shape: Vec<usize> },
    /// Tensors of the given shape with rank at most `k`.
    TensorRankAtMost { shape: Vec<usize>, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VarietyKind", into = "VarietyKind")]
pub struct VarietySpec {
    kind: VarietyKind,
    ambient_dim: usize,
}

impl TryFrom<VarietyKind> for VarietySpec {
    type Error = Error;
    fn try_from(kind: VarietyKind) -> Result<Self> {
        VarietySpec::new(kind)
    }
}

impl From<VarietySpec> for VarietyKind {
    fn from(v: VarietySpec) -> Self {
        v.kind
    }
}

impl VarietySpec {
    pub fn new(kind: VarietyKind) -> Result<Self> {
        let ambient_dim = match &kind {
            VarietyKind::Subspace { n, r, basis } => {
                if *n == 0 || *r == 0 || basis.len() != n * r {
                    return invalid(format!("subspace basis must be {n}x{r} with r >= 1"));
                }
                let b = linalg::matrix_row_major(*n, *r, basis);
                if linalg::numerical_rank(&b, 1e-10) != *r {
                    return invalid("subspace basis must have full column rank");
                }
                *n
            }
            VarietyKind::DiagQuadricCone { coeffs } => {
                if coeffs.is_empty() {
                    return invalid("quadric cone needs at least one coefficient");
                }
                if coeffs.iter().any(|a| *a == 0.0 || !a.is_finite()) {
                    return invalid("quadric cone coefficients must be finite and nonzero");
                }
                coeffs.len()
            }
            VarietyKind::MatrixRankAtMost { p, q, k } => {
                if *k < 1 || *k >= (*p).min(*q) {
                    return invalid(format!("matrix rank bound needs 1 <= k < min(p,q), got k={k} for {p}x{q}"));
                }
                p * q
            }
            VarietyKind::TensorRankOne { shape } => {
                if shape.len() < 2 || shape.iter().any(|&m| m == 0) {
                    return invalid(format!("rank-one tensor variety needs order >= 2 and positive modes, got {shape:?}"));
                }
                shape.iter().product()
            }
            VarietyKind::TensorRankAtMost { shape, k } => {
                if shape.len() < 3 || shape.iter().any(|&m| m == 0) {
                    return invalid(format!("tensor rank variety needs order >= 3, got {shape:?}"));
                }
                if *k < 1 {
                    return invalid("tensor rank bound must be >= 1");
                }
                shape.iter().product()
            }
        };
        Ok(VarietySpec { kind, ambient_dim })
    }

    pub fn subspace(basis: &DMatrix<f64>) -> Result<Self> {
        VarietySpec::new(VarietyKind::Subspace {
            n: basis.nrows(),
            r: basis.ncols(),
            basis: linalg::flatten_row_major(basis),
        })
    }

    pub fn quadric_cone(coeffs: &[f64]) -> Result<Self> {
        VarietySpec::new(VarietyKind::DiagQuadricCone { coeffs: coeffs.to_vec() })
    }

    pub fn matrix_rank(p: usize, q: usize, k: usize) -> Result<Self> {
        VarietySpec::new(VarietyKind::MatrixRankAtMost { p, q, k })
    }

    pub fn tensor_rank_one(shape: &[usize]) -> Result<Self> {
        VarietySpec::new(VarietyKind::TensorRankOne { shape: shape.to_vec() })
    }

    pub fn tensor_rank(shape: &[usize], k: usize) -> Result<Self> {
        VarietySpec::new(VarietyKind::TensorRankAtMost { shape: shape.to_vec(), k })
    }

    pub fn kind(&self) -> &VarietyKind {
        &self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Tensor shape for tensor varieties.
    pub fn tensor_shape(&self) -> Option<&[usize]> {
        match &self.kind {
            VarietyKind::TensorRankOne { shape } | VarietyKind::TensorRankAtMost { shape, .. } => Some(shape),
            _ => None,
        }
    }

    pub(crate) fn check_point(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.ambient_dim {
            return Err(Error::ShapeMismatch(format!(
                "{what} has {} coordinates, variety lives in R^{}",
                x.len(),
                self.ambient_dim
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return invalid(format!("{what} must be finite"));
        }
        Ok(())
    }
}

/// One stratum of the singular-locus tree. `closure` is `None` for the
/// zero-dimensional stratum `{0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumNode {
    pub label: String,
    pub closure: Option<VarietySpec>,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumTree {
    pub strata: Vec<StratumNode>,
}

impl StratumTree {
    /// Tree with the full variety at index 0. Each child lies in the
    /// singular locus of its parent.
    pub fn for_variety(v: &VarietySpec) -> Self {
        let mut strata = vec![StratumNode { label: "smooth locus".into(), closure: Some(v.clone()), parent: None }];
        let origin = |parent| StratumNode { label: "origin".into(), closure: None, parent: Some(parent) };
        match v.kind() {
            VarietyKind::Subspace { .. } => {}
            VarietyKind::DiagQuadricCone { .. } | VarietyKind::TensorRankOne { .. } => strata.push(origin(0)),
            VarietyKind::MatrixRankAtMost { p, q, k } => {
                for j in (1..*k).rev() {
                    let parent = strata.len() - 1;
                    strata.push(StratumNode {
                        label: format!("rank {j}"),
                        closure: Some(VarietySpec::matrix_rank(*p, *q, j).expect("1 <= j < k")),
                        parent: Some(parent),
                    });
                }
                let parent = strata.len() - 1;
                strata.push(origin(parent));
            }
            // singular locus of higher-rank tensor varieties is not
            // characterized; only the smooth locus is searched
            VarietyKind::TensorRankAtMost { .. } => {}
        }
        StratumTree { strata }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub y: Vec<f64>,
    pub distance: f64,
    /// Index into the report's stratum tree.
    pub stratum: usize,
    pub residual: f64,
    /// Parameters of the CP chart that produced the point, if any.
    #[serde(skip)]
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub variety: VarietySpec,
    pub query: Vec<f64>,
    /// Critical points on the smooth locus (stratum 0), nearest first.
    pub points: Vec<CriticalPoint>,
    /// Critical points on proper singular strata, nearest first.
    pub singular_points: Vec<CriticalPoint>,
    pub delta_estimate: usize,
    /// Nearest critical point over all strata.
    pub best: CriticalPoint,
    /// Second smallest minus smallest critical distance over all strata;
    /// `None` when only one critical point exists.
    pub uniqueness_gap: Option<f64>,
    pub strata: StratumTree,
    pub starts: usize,
    pub seed: u64,
    pub limitations: Vec<String>,
}

impl CriticalReport {
    pub fn best_distance(&self) -> f64 {
        self.best.distance
    }

    /// `true` when the gap to the runner-up exceeds [`UNIQUENESS_TOL`].
    pub fn is_unique(&self) -> bool {
        self.uniqueness_gap.is_none_or(|g| g > UNIQUENESS_TOL)
    }

    pub fn all_points(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().chain(&self.singular_points)
    }
}
