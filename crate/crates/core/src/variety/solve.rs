use itertools::Itertools;
use rayon::prelude::*;

use super::residual::residual_at;
use super::{
    quadric, CriticalPoint, CriticalReport, StratumTree, VarietyKind, VarietySpec, CRITICAL_TOL, DEDUP_TOL,
};
use crate::cp::{self, CpLayout, LmOptions};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::rng;
use crate::tensor::DenseTensor;

/// Iteration cap of the least-squares fit run from every tensor start.
const LS_MAX_ITER: usize = 500;

/// Candidate point with optional CP chart parameters.
type Candidate = (Vec<f64>, Option<Vec<f64>>);

/// Truncations `sum_{i in Omega} s_i u_i v_i^T` over all `k`-subsets of
/// the nonzero singular values.
fn matrix_candidates(p: usize, q: usize, k: usize, x: &[f64], notes: &mut Vec<String>) -> Vec<Candidate> {
    let m = linalg::matrix_row_major(p, q, x);
    let svd = linalg::thin_svd(&m);
    let (u, v, s) = (&svd.u, &svd.v, &svd.s);
    let top = s.iter().copied().fold(0.0, f64::max);
    let nonzero: Vec<usize> = (0..s.len()).filter(|&i| s[i] > 1e-10 * top.max(1.0)).collect();
    let mut sorted: Vec<f64> = nonzero.iter().map(|&i| s[i]).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] <= 1e-10 * top) {
        let note = "repeated singular values: the critical set is positive-dimensional and only SVD representatives are reported";
        if !notes.iter().any(|n| n == note) {
            notes.push(note.to_string());
        }
    }
    (0..nonzero.len())
        .combinations(k)
        .map(|omega| {
            let mut a = nalgebra::DMatrix::zeros(p, q);
            for &o in &omega {
                let i = nonzero[o];
                a += u.column(i) * v.column(i).transpose() * s[i];
            }
            (linalg::flatten_row_major(&a), None)
        })
        .collect()
}

/// Multistart solve of the stationarity system of `||x - phi(theta)||^2`
/// over the CP parameterization with `k` terms.
fn tensor_candidates(shape: &[usize], k: usize, x: &[f64], starts: usize, seed: u64) -> Vec<Candidate> {
    let layout = CpLayout::new(shape, k);
    let xt = DenseTensor::new(shape.to_vec(), x.to_vec()).expect("query checked by caller");
    let hosvd = cp::hosvd_params(&xt, k);
    let xn = linalg::norm(x).max(1e-300);
    let opts = LmOptions::default();
    let outcomes: Vec<Vec<Candidate>> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::task(seed, i);
            let mut theta0 = vec![0.0; layout.nparams()];
            for j in 0..k {
                for (mode, &m) in shape.iter().enumerate() {
                    let o = layout.offset(j, mode);
                    let g = rng::unit_vec(&mut r, m);
                    if i % 2 == 0 {
                        let base = &hosvd[o..o + m];
                        let bn = linalg::norm(base);
                        for a in 0..m {
                            theta0[o + a] = base[a] + 0.5 * bn * g[a];
                        }
                    } else {
                        let s = if mode == 0 { xn * rng::gaussian(&mut r) / k as f64 } else { 1.0 };
                        for a in 0..m {
                            theta0[o + a] = s * g[a];
                        }
                    }
                }
            }
            let mut found = Vec::with_capacity(2);
            let mut keep = |theta: Vec<f64>| {
                let y = layout.eval(&theta);
                if linalg::norm(&y) > 1e-8 {
                    found.push((y, Some(theta)));
                }
            };
            if let Some(out) = cp::solve_stationary(&layout, x, &theta0, opts) {
                keep(out.theta);
            }
            // saddle-seeking steps can miss local minima of the distance,
            // so each start also contributes its least-squares minimizer
            let (fitted, _) = cp::fit_least_squares(&layout, x, &theta0, LS_MAX_ITER);
            if let Some(out) = cp::solve_stationary(&layout, x, &fitted, opts) {
                keep(out.theta);
            }
            found
        })
        .collect();
    outcomes.into_iter().flatten().collect()
}

fn stratum_candidates(
    spec: &VarietySpec,
    x: &[f64],
    starts: usize,
    seed: u64,
    notes: &mut Vec<String>,
) -> Vec<Candidate> {
    match spec.kind() {
        VarietyKind::Subspace { n, r, basis } => {
            let q = linalg::column_basis(&linalg::matrix_row_major(*n, *r, basis), 1e-12);
            vec![(linalg::project(&q, x), None)]
        }
        VarietyKind::DiagQuadricCone { coeffs } => quadric::candidates(coeffs, x)
            .into_iter()
            .filter(|y| linalg::norm(y) > 1e-12)
            .map(|y| (y, None))
            .collect(),
        VarietyKind::MatrixRankAtMost { p, q, k } => matrix_candidates(*p, *q, *k, x, notes),
        VarietyKind::TensorRankOne { shape } => tensor_candidates(shape, 1, x, starts, seed),
        VarietyKind::TensorRankAtMost { shape, k } => tensor_candidates(shape, *k, x, starts, seed),
    }
}

fn push_unique(kept: &mut Vec<CriticalPoint>, p: CriticalPoint) {
    if kept.iter().all(|q| linalg::dist(&q.y, &p.y) > DEDUP_TOL) {
        kept.push(p);
    }
}

fn sort_points(points: &mut [CriticalPoint]) {
    points.sort_by(|a, b| a.distance.total_cmp(&b.distance));
}

/// Real critical points of `||x - y||^2` over every stratum of `v`.
///
/// Subspaces, rank-bounded matrices and diagonal quadric cones are solved
/// in closed form. Tensor varieties use `starts` Levenberg-Marquardt runs
/// on the stationarity equations, start `i` seeded with `seed + i`;
/// non-converging starts are dropped. Points closer than [`DEDUP_TOL`] are
/// merged, and only points with tangential residual at most
/// [`CRITICAL_TOL`] are kept.
pub fn critical_set(v: &VarietySpec, x: &[f64], starts: usize, seed: u64) -> Result<CriticalReport> {
    v.check_point(x, "query")?;
    if starts == 0 {
        return invalid("starts must be >= 1");
    }
    let tree = StratumTree::for_variety(v);
    let mut notes = Vec::new();
    let mut points = Vec::new();
    let mut singular_points = Vec::new();
    for (idx, node) in tree.strata.iter().enumerate() {
        let kept = if idx == 0 { &mut points } else { &mut singular_points };
        let spec = match &node.closure {
            Some(s) => s,
            None => {
                let y = vec![0.0; x.len()];
                let distance = linalg::norm(x);
                push_unique(kept, CriticalPoint { y, distance, stratum: idx, residual: 0.0, params: None });
                continue;
            }
        };
        for (y, params) in stratum_candidates(spec, x, starts, seed, &mut notes) {
            let residual = match residual_at(spec, x, &y, params.as_deref()) {
                Ok(r) => r,
                Err(Error::SingularPoint { .. }) => continue,
                Err(e) => return Err(e),
            };
            if !(residual <= CRITICAL_TOL) {
                continue;
            }
            let distance = linalg::dist(x, &y);
            push_unique(kept, CriticalPoint { y, distance, stratum: idx, residual, params });
        }
    }
    sort_points(&mut points);
    sort_points(&mut singular_points);

    let mut all: Vec<&CriticalPoint> = points.iter().chain(&singular_points).collect();
    all.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    let best = match all.first() {
        Some(p) => (*p).clone(),
        None => return Err(Error::NoCriticalPoint),
    };
    let uniqueness_gap = all.get(1).map(|p| p.distance - best.distance);

    match v.kind() {
        VarietyKind::TensorRankOne { .. } => notes.push(
            "tensor critical points come from a seeded multistart search; the count is a lower bound".to_string(),
        ),
        VarietyKind::TensorRankAtMost { .. } => {
            notes.push(
                "tensor critical points come from a seeded multistart search; the count is a lower bound".to_string(),
            );
            notes.push("singular locus not characterized: only the smooth locus was searched".to_string());
        }
        _ => {}
    }

    Ok(CriticalReport {
        variety: v.clone(),
        query: x.to_vec(),
        delta_estimate: points.len(),
        points,
        singular_points,
        best,
        uniqueness_gap,
        strata: tree,
        starts,
        seed,
        limitations: notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn subspace_projection() {
        let v = VarietySpec::subspace(&DMatrix::from_row_slice(2, 1, &[1.0, 0.0])).unwrap();
        let r = critical_set(&v, &[3.0, 4.0], 1, 0).unwrap();
        assert_eq!(r.delta_estimate, 1);
        assert_eq!(r.points[0].y, vec![3.0, 0.0]);
        assert_eq!(r.best_distance(), 4.0);
    }

    #[test]
    fn rank_one_diag_census() {
        let v = VarietySpec::matrix_rank(3, 3, 1).unwrap();
        let x = [3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0];
        let r = critical_set(&v, &x, 1, 7).unwrap();
        assert_eq!(r.points.len(), 3);
        let d: Vec<f64> = r.points.iter().map(|p| p.distance).collect();
        for (got, want) in d.iter().zip([5f64.sqrt(), 10f64.sqrt(), 13f64.sqrt()]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((r.points[0].y[0] - 3.0).abs() < 1e-12);
        // the origin is the only singular stratum point
        assert_eq!(r.singular_points.len(), 1);
        assert_eq!(r.best, r.points[0]);
    }

    #[test]
    fn quadric_lines() {
        let v = VarietySpec::quadric_cone(&[1.0, -1.0]).unwrap();
        let r = critical_set(&v, &[1.0, 0.0], 1, 0).unwrap();
        assert_eq!(r.points.len(), 2);
        for p in &r.points {
            assert!((p.distance - 0.5f64.sqrt()).abs() < 1e-12);
            assert!((p.y[0] - 0.5).abs() < 1e-12 && (p.y[1].abs() - 0.5).abs() < 1e-12);
        }
        assert!(r.uniqueness_gap.unwrap() < 1e-12);
        assert!(!r.is_unique());
    }

    #[test]
    fn rank_one_tensor_multistart_finds_the_rank_one_input() {
        let v = VarietySpec::tensor_rank_one(&[2, 2, 2]).unwrap();
        let u = [0.6, 0.8];
        let x: Vec<f64> = (0..8).map(|i| 2.0 * u[i >> 2] * u[(i >> 1) & 1] * u[i & 1]).collect();
        let r = critical_set(&v, &x, 20, 3).unwrap();
        assert!(r.best_distance() < 1e-10);
        assert!(r.points.iter().all(|p| p.residual <= CRITICAL_TOL));
    }
}
