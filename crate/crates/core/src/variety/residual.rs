use nalgebra::{DMatrix, DVector};

use super::{CriticalPoint, StratumTree, VarietyKind, VarietySpec, ON_VARIETY_TOL};
use crate::cp::{self, CpLayout};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::rng;
use crate::tensor::DenseTensor;

/// Relative cutoff below which a singular value of a point on a matrix
/// variety counts as zero.
const MATRIX_RANK_TOL: f64 = 1e-10;

/// Tangent space of a variety at a smooth point.
pub(crate) enum Tangent {
    /// Orthonormal basis as matrix columns.
    Basis(DMatrix<f64>),
    /// Hyperplane with the given normal.
    Normal(Vec<f64>),
    /// `{ U A^T + B V^T }` at a rank-`k` matrix with singular vectors `U`, `V`.
    LowRank { p: usize, q: usize, u: DMatrix<f64>, v: DMatrix<f64> },
}

impl Tangent {
    pub(crate) fn project(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Tangent::Basis(q) => linalg::project(q, z),
            Tangent::Normal(n) => {
                let c = linalg::dot(n, z) / linalg::dot(n, n);
                z.iter().zip(n).map(|(zi, ni)| zi - c * ni).collect()
            }
            Tangent::LowRank { p, q, u, v } => {
                let zm = linalg::matrix_row_major(*p, *q, z);
                let uu = u * u.transpose();
                let vv = v * v.transpose();
                let proj = &uu * &zm + &zm * &vv - &uu * &zm * &vv;
                linalg::flatten_row_major(&proj)
            }
        }
    }
}

fn quadric_value(a: &[f64], y: &[f64]) -> f64 {
    a.iter().zip(y).map(|(ai, yi)| ai * yi * yi).sum()
}

fn subspace_basis(n: usize, r: usize, basis: &[f64]) -> DMatrix<f64> {
    linalg::column_basis(&linalg::matrix_row_major(n, r, basis), 1e-12)
}

/// Rank-one chart parameters of a tensor that is (close to) rank one.
fn rank_one_params(shape: &[usize], y: &[f64]) -> Vec<f64> {
    let t = DenseTensor::new(shape.to_vec(), y.to_vec()).expect("shape checked by caller");
    cp::hosvd_params(&t, 1)
}

fn fit_rank_k(shape: &[usize], k: usize, y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let t = DenseTensor::new(shape.to_vec(), y.to_vec())?;
    let model = crate::approx::best_rank_k(&t, k, 8, 0)?;
    let layout = CpLayout::new(shape, k);
    Ok((layout.from_terms(&model.terms), model.objective))
}

/// Distance-like measure of how far `y` is from satisfying the variety's
/// equations; zero on the variety.
///
/// For the quadric cone this is `|sum a_i y_i^2| / max(1, ||y||)`; for
/// matrices the `(k+1)`-th singular value; for tensor varieties the
/// residual of the best fit by the variety's parameterization.
pub fn constraint_residual(v: &VarietySpec, y: &[f64]) -> Result<f64> {
    v.check_point(y, "point")?;
    Ok(match v.kind() {
        VarietyKind::Subspace { n, r, basis } => {
            let q = subspace_basis(*n, *r, basis);
            linalg::dist(&linalg::project(&q, y), y)
        }
        VarietyKind::DiagQuadricCone { coeffs } => quadric_value(coeffs, y).abs() / linalg::norm(y).max(1.0),
        VarietyKind::MatrixRankAtMost { p, q, k } => {
            let sv = linalg::singular_values(&linalg::matrix_row_major(*p, *q, y));
            sv.get(*k).copied().unwrap_or(0.0)
        }
        VarietyKind::TensorRankOne { shape } => {
            let theta = rank_one_params(shape, y);
            linalg::dist(&CpLayout::new(shape, 1).eval(&theta), y)
        }
        VarietyKind::TensorRankAtMost { shape, k } => fit_rank_k(shape, *k, y)?.1,
    })
}

/// Tangent space at `y`, which must be a smooth point. `params` are CP
/// chart parameters for tensor varieties when already known.
pub(crate) fn tangent_at(v: &VarietySpec, y: &[f64], params: Option<&[f64]>) -> Result<Tangent> {
    let singular = |child: &str| Err(Error::SingularPoint { child: child.to_string() });
    match v.kind() {
        VarietyKind::Subspace { n, r, basis } => Ok(Tangent::Basis(subspace_basis(*n, *r, basis))),
        VarietyKind::DiagQuadricCone { coeffs } => {
            let normal: Vec<f64> = coeffs.iter().zip(y).map(|(a, yi)| a * yi).collect();
            if linalg::norm(&normal) <= 1e-12 {
                return singular("origin");
            }
            Ok(Tangent::Normal(normal))
        }
        VarietyKind::MatrixRankAtMost { p, q, k } => {
            let m = linalg::matrix_row_major(*p, *q, y);
            let svd = linalg::thin_svd(&m);
            let top = svd.s[0];
            let rank = svd.s.iter().filter(|&&s| s > MATRIX_RANK_TOL * top.max(1.0)).count();
            if rank < *k {
                return if rank == 0 { singular("origin") } else { singular(&format!("rank {rank}")) };
            }
            let u = svd.u.columns(0, *k).into_owned();
            let v = svd.v.columns(0, *k).into_owned();
            Ok(Tangent::LowRank { p: *p, q: *q, u, v })
        }
        VarietyKind::TensorRankOne { shape } => {
            if linalg::norm(y) <= 1e-12 {
                return singular("origin");
            }
            let theta = match params {
                Some(p) => p.to_vec(),
                None => rank_one_params(shape, y),
            };
            Ok(Tangent::Basis(CpLayout::new(shape, 1).tangent_basis(&theta)))
        }
        VarietyKind::TensorRankAtMost { shape, k } => {
            let layout = CpLayout::new(shape, *k);
            let theta = match params {
                Some(p) => p.to_vec(),
                None => fit_rank_k(shape, *k, y)?.0,
            };
            let basis = layout.tangent_basis(&theta);
            if basis.ncols() < layout.expected_dim() {
                return singular("rank-deficient tangent space (singular locus not characterized)");
            }
            Ok(Tangent::Basis(basis))
        }
    }
}

/// Norm of the tangential component of `x - y` at the smooth point `y`.
/// Zero exactly when `y` is critical for `g_x`.
pub fn critical_residual(v: &VarietySpec, x: &[f64], y: &[f64]) -> Result<f64> {
    v.check_point(x, "query")?;
    v.check_point(y, "point")?;
    let c = constraint_residual(v, y)?;
    if c > ON_VARIETY_TOL {
        return Err(Error::OffVariety { residual: c, tolerance: ON_VARIETY_TOL });
    }
    residual_at(v, x, y, None)
}

pub(crate) fn residual_at(v: &VarietySpec, x: &[f64], y: &[f64], params: Option<&[f64]>) -> Result<f64> {
    let t = tangent_at(v, y, params)?;
    Ok(linalg::norm(&t.project(&linalg::sub(x, y))))
}

/// A smooth curve `c(h)` on the variety through `y` with unit tangent.
enum Chart {
    Line { y: Vec<f64>, dir: Vec<f64> },
    Quadric { a: Vec<f64>, y: Vec<f64>, dir: Vec<f64>, normal: Vec<f64> },
    Factored { l: DMatrix<f64>, r: DMatrix<f64>, dl: DMatrix<f64>, dr: DMatrix<f64> },
    Cp { layout: CpLayout, theta: Vec<f64>, eta: Vec<f64> },
}

impl Chart {
    fn at(&self, h: f64) -> Vec<f64> {
        match self {
            Chart::Line { y, dir } => y.iter().zip(dir).map(|(a, b)| a + h * b).collect(),
            Chart::Quadric { a, y, dir, normal } => {
                let z: Vec<f64> = y.iter().zip(dir).map(|(p, t)| p + h * t).collect();
                // move along the normal back onto the cone: q(z + s n) = 0
                let c0 = quadric_value(a, &z);
                let c1 = 2.0 * a.iter().zip(&z).zip(normal).map(|((ai, zi), ni)| ai * zi * ni).sum::<f64>();
                let c2 = quadric_value(a, normal);
                let s = if c2.abs() < 1e-300 {
                    -c0 / c1
                } else {
                    let disc = (c1 * c1 - 4.0 * c2 * c0).max(0.0).sqrt();
                    // root of smaller magnitude, computed stably
                    let big = -0.5 * (c1 + c1.signum() * disc);
                    if big == 0.0 { 0.0 } else { c0 / big }
                };
                z.iter().zip(normal).map(|(zi, ni)| zi + s * ni).collect()
            }
            Chart::Factored { l, r, dl, dr, .. } => {
                let m = (l + dl * h) * (r + dr * h).transpose();
                linalg::flatten_row_major(&m)
            }
            Chart::Cp { layout, theta, eta } => {
                let t: Vec<f64> = theta.iter().zip(eta).map(|(a, b)| a + h * b).collect();
                layout.eval(&t)
            }
        }
    }
}

fn chart(spec: &VarietySpec, point: &CriticalPoint, rng: &mut rng::Rng) -> Result<Option<Chart>> {
    let y = &point.y;
    let unit = |v: Vec<f64>| {
        let n = linalg::norm(&v);
        linalg::scaled(&v, 1.0 / n)
    };
    Ok(Some(match spec.kind() {
        VarietyKind::Subspace { n, r, basis } => {
            let q = subspace_basis(*n, *r, basis);
            let dir = unit((&q * DVector::from_vec(rng::gaussian_vec(rng, q.ncols()))).iter().copied().collect());
            Chart::Line { y: y.clone(), dir }
        }
        VarietyKind::DiagQuadricCone { coeffs } => {
            let t = tangent_at(spec, y, None)?;
            let normal: Vec<f64> = coeffs.iter().zip(y).map(|(a, yi)| a * yi).collect();
            let dir = unit(t.project(&rng::gaussian_vec(rng, y.len())));
            Chart::Quadric { a: coeffs.clone(), y: y.clone(), dir, normal: unit(normal) }
        }
        VarietyKind::MatrixRankAtMost { p, q, k } => {
            let m = linalg::matrix_row_major(*p, *q, y);
            let svd = linalg::thin_svd(&m);
            let l = DMatrix::from_fn(*p, *k, |i, j| svd.u[(i, j)] * svd.s[j]);
            let r = svd.v.columns(0, *k).into_owned();
            let mut dl = DMatrix::from_fn(*p, *k, |_, _| rng::gaussian(rng));
            let mut dr = DMatrix::from_fn(*q, *k, |_, _| rng::gaussian(rng));
            let tn = (&dl * r.transpose() + &l * dr.transpose()).norm();
            dl /= tn;
            dr /= tn;
            Chart::Factored { l, r, dl, dr }
        }
        VarietyKind::TensorRankOne { shape } | VarietyKind::TensorRankAtMost { shape, .. } => {
            let k = match spec.kind() {
                VarietyKind::TensorRankAtMost { k, .. } => *k,
                _ => 1,
            };
            let layout = CpLayout::new(shape, k);
            let theta = match (&point.params, k) {
                (Some(p), _) => p.clone(),
                (None, 1) => rank_one_params(shape, y),
                (None, _) => fit_rank_k(shape, k, y)?.0,
            };
            let jac = layout.jacobian(&theta);
            let eta = rng::gaussian_vec(rng, layout.nparams());
            let tn = (&jac * DVector::from_column_slice(&eta)).norm();
            if tn == 0.0 {
                return Ok(None);
            }
            let eta = linalg::scaled(&eta, 1.0 / tn);
            Chart::Cp { layout, theta, eta }
        }
    }))
}

/// Largest central-difference derivative of `||x - c(h)||^2` at `h = 0`
/// over `directions` random unit-speed curves `c` on the point's stratum.
/// Points on the zero-dimensional origin stratum return 0.
pub fn stationarity_fd(
    v: &VarietySpec,
    x: &[f64],
    point: &CriticalPoint,
    directions: usize,
    step: f64,
    seed: u64,
) -> Result<f64> {
    v.check_point(x, "query")?;
    let tree = StratumTree::for_variety(v);
    let node = tree
        .strata
        .get(point.stratum)
        .ok_or_else(|| Error::InvalidInput(format!("stratum {} not in the tree", point.stratum)))?;
    let spec = match &node.closure {
        Some(s) => s,
        None => return Ok(0.0),
    };
    if step <= 0.0 {
        return invalid("finite-difference step must be positive");
    }
    let mut rng = rng::seeded(seed);
    let g = |y: Vec<f64>| linalg::dist(x, &y).powi(2);
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        if let Some(c) = chart(spec, point, &mut rng)? {
            let deriv = (g(c.at(step)) - g(c.at(-step))) / (2.0 * step);
            worst = worst.max(deriv.abs());
        }
    }
    Ok(worst)
}
