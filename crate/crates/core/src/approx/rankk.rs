use nalgebra::DMatrix;
use rayon::prelude::*;

use super::rank1::polish;
use super::{CPModel, ALS_MAX_SWEEPS, ALS_REL_TOL, ESCAPE_FACTOR, RANKK_STATIONARITY_TOL};
use crate::cp::{self, CpLayout};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::rng;
use crate::tensor::{DenseTensor, RankOneTerm};

/// Normal equations whose condition number exceeds this abort the start.
const MAX_CONDITION: f64 = 1e12;

struct AlsRun {
    terms: Vec<RankOneTerm>,
    history: Vec<f64>,
    iterations: usize,
    settled: bool,
    escape: bool,
}

fn to_terms(factors: &[DMatrix<f64>], k: usize) -> Vec<RankOneTerm> {
    (0..k)
        .map(|j| RankOneTerm {
            weight: 1.0,
            factors: factors.iter().map(|a| a.column(j).iter().copied().collect()).collect(),
        })
        .collect()
}

/// Spread each term's scale evenly over its modes (sign kept in mode 1)
/// and return the term weights.
fn balance(factors: &mut [DMatrix<f64>], k: usize) -> Vec<f64> {
    let d = factors.len();
    (0..k)
        .map(|j| {
            let norms: Vec<f64> = factors.iter().map(|a| a.column(j).norm()).collect();
            let w: f64 = norms.iter().product();
            if w > 0.0 {
                let s = w.powf(1.0 / d as f64);
                for (a, n) in factors.iter_mut().zip(&norms) {
                    let mut c = a.column_mut(j);
                    c *= s / n;
                }
            }
            w
        })
        .collect()
}

fn als(t: &DenseTensor, k: usize, mut factors: Vec<DMatrix<f64>>) -> Option<AlsRun> {
    let d = t.order();
    let shape = t.shape().to_vec();
    let tn = t.norm();
    let layout = CpLayout::new(&shape, k);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut settled = false;
    let mut escape = false;
    while iterations < ALS_MAX_SWEEPS {
        iterations += 1;
        for i in 0..d {
            let mut v = DMatrix::from_element(k, k, 1.0);
            for (l, a) in factors.iter().enumerate() {
                if l != i {
                    v.component_mul_assign(&(a.transpose() * a));
                }
            }
            let sv = v.singular_values();
            let (smax, smin) = (sv.max(), sv.min());
            if !(smin > 0.0) || smax / smin > MAX_CONDITION {
                return None;
            }
            let mut mttkrp = DMatrix::zeros(shape[i], k);
            for j in 0..k {
                let cols: Vec<Vec<f64>> = factors.iter().map(|a| a.column(j).iter().copied().collect()).collect();
                let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
                let c = t.contract_except(i, &refs);
                mttkrp.column_mut(j).copy_from_slice(&c);
            }
            let chol = v.cholesky()?;
            factors[i] = chol.solve(&mttkrp.transpose()).transpose();
        }
        let weights = balance(&mut factors, k);
        let terms = to_terms(&factors, k);
        let obj = linalg::dist(t.data(), &layout.eval(&layout.from_terms(&terms)));
        if !obj.is_finite() {
            return None;
        }
        if weights.iter().any(|w| w.abs() > ESCAPE_FACTOR * tn.max(1.0)) {
            escape = true;
            history.push(obj);
            break;
        }
        if let Some(&prev) = history.last() {
            let change: f64 = prev - obj;
            if change.abs() <= ALS_REL_TOL * prev.max(obj) || change.abs() <= 1e-15 * tn {
                history.push(obj);
                settled = true;
                break;
            }
        }
        history.push(obj);
    }
    Some(AlsRun { terms: to_terms(&factors, k), history, iterations, settled, escape })
}

fn start_factors(t: &DenseTensor, k: usize, i: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let shape = t.shape();
    let mut r = rng::task(seed, i);
    let scale = (t.norm() / k as f64).powf(1.0 / shape.len() as f64).max(1e-12);
    if i == 0 {
        let layout = CpLayout::new(shape, k);
        let theta = cp::hosvd_params(t, k);
        return shape
            .iter()
            .enumerate()
            .map(|(mode, &m)| {
                DMatrix::from_fn(m, k, |a, j| {
                    let f = layout.factor(&theta, j, mode);
                    scale * (f[a] / linalg::norm(f) + 0.3 * rng::gaussian(&mut r))
                })
            })
            .collect();
    }
    shape.iter().map(|&m| DMatrix::from_fn(m, k, |_, _| scale * rng::gaussian(&mut r))).collect()
}

/// Best rank-`k` candidate among `starts` ALS runs (start 0 from a
/// perturbed truncated HOSVD, start `i > 0` from Gaussian factors seeded
/// with `seed + i`). Each run is polished by Levenberg-Marquardt on the
/// stationarity equations. Runs whose normal equations become
/// ill-conditioned are dropped. Runs whose term weights diverge are kept
/// and flagged as border-rank escapes.
pub fn best_rank_k(t: &DenseTensor, k: usize, starts: usize, seed: u64) -> Result<CPModel> {
    if k == 0 {
        return invalid("rank must be >= 1");
    }
    if starts == 0 {
        return invalid("starts must be >= 1");
    }
    if !t.data().iter().all(|v| v.is_finite()) {
        return invalid("tensor must be finite");
    }
    let tn = t.norm();
    let models: Vec<CPModel> = (0..starts)
        .into_par_iter()
        .filter_map(|i| {
            let run = als(t, k, start_factors(t, k, i, seed))?;
            if run.escape {
                let layout = CpLayout::new(t.shape(), k);
                let theta = layout.from_terms(&run.terms);
                return Some(CPModel {
                    objective: *run.history.last().expect("one sweep ran"),
                    stationarity: cp::tangent_residual(&layout, &theta, t.data()),
                    terms: run.terms,
                    iterations: run.iterations,
                    converged: false,
                    history: run.history,
                    border_rank_escape: true,
                    start: i,
                });
            }
            let mut m = polish(t, run.terms, run.history, run.iterations, i);
            m.converged = !m.border_rank_escape && (run.settled || m.stationarity <= RANKK_STATIONARITY_TOL * tn.max(1.0));
            Some(m)
        })
        .collect();
    let mut best: Option<CPModel> = None;
    for m in models {
        if best.as_ref().is_none_or(|b| m.objective < b.objective) {
            best = Some(m);
        }
    }
    best.ok_or(Error::NotConverged { starts })
}
