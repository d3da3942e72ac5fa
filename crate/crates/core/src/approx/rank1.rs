use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CPModel, ALS_MAX_SWEEPS, ALS_REL_TOL, ESCAPE_FACTOR, RANK1_STATIONARITY_TOL};

/// Iteration cap of the least-squares refinement after ALS.
const LS_MAX_ITER: usize = 2000;
use crate::cp::{self, CpLayout, LmOptions};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::rng;
use crate::tensor::{DenseTensor, RankOneTerm, SymTensor};
use crate::variety::DEDUP_TOL;

fn objective(t: &DenseTensor, weight: f64, factors: &[Vec<f64>]) -> f64 {
    let y = RankOneTerm { weight, factors: factors.to_vec() }.dense();
    linalg::dist(t.data(), y.data())
}

fn converged_change(prev: f64, cur: f64, scale: f64) -> bool {
    (prev - cur).abs() <= ALS_REL_TOL * prev.max(cur) || (prev - cur).abs() <= 1e-15 * scale
}

/// One rank-one ALS run from unit factors `factors`.
fn als_rank1(t: &DenseTensor, mut factors: Vec<Vec<f64>>, start: usize) -> Option<CPModel> {
    let d = t.order();
    let tn = t.norm();
    let mut weight = 0.0;
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < ALS_MAX_SWEEPS {
        iterations += 1;
        for i in 0..d {
            let refs: Vec<&[f64]> = factors.iter().map(Vec::as_slice).collect();
            let v = t.contract_except(i, &refs);
            let n = linalg::norm(&v);
            if !(n > 0.0) {
                return None;
            }
            factors[i] = linalg::scaled(&v, 1.0 / n);
            weight = n;
        }
        let obj = objective(t, weight, &factors);
        if let Some(&prev) = history.last() {
            if converged_change(prev, obj, tn) {
                history.push(obj);
                break;
            }
        }
        history.push(obj);
    }
    let term = RankOneTerm { weight, factors };
    let mut model = polish(t, vec![term], history, iterations, start);
    model.converged = model.stationarity <= RANK1_STATIONARITY_TOL * tn.max(1.0);
    Some(model)
}

/// Refines an ALS model by Levenberg-Marquardt on the least-squares
/// residual, then by Newton-type steps on the stationarity equations; the
/// last stage is kept only if it does not raise the objective. Flags a
/// border-rank escape when a term weight diverges.
pub(super) fn polish(t: &DenseTensor, terms: Vec<RankOneTerm>, mut history: Vec<f64>, iterations: usize, start: usize) -> CPModel {
    let k = terms.len();
    let layout = CpLayout::new(t.shape(), k);
    let theta = layout.from_terms(&terms);
    let x = t.data();
    let t_norm = t.norm();
    let (theta, base_obj) = cp::fit_least_squares(&layout, x, &theta, LS_MAX_ITER);
    let mut best_theta = theta.clone();
    let mut best_obj = base_obj;
    if let Some(out) = cp::solve_stationary(&layout, x, &theta, LmOptions { max_iter: 50, ..LmOptions::default() }) {
        let obj = linalg::dist(x, &layout.eval(&out.theta));
        if obj <= base_obj + 1e-12 * t.norm().max(1.0) {
            best_theta = out.theta;
            best_obj = obj;
        }
    }
    if history.last().is_none_or(|&h| best_obj <= h) {
        history.push(best_obj);
    }
    let stationarity = cp::tangent_residual(&layout, &best_theta, x);
    let terms = layout.to_terms(&best_theta);
    let escape = terms.iter().any(|t| t.weight.abs() > ESCAPE_FACTOR * t_norm.max(1.0));
    CPModel {
        terms,
        objective: best_obj,
        iterations,
        converged: false,
        history,
        stationarity,
        border_rank_escape: escape,
        start,
    }
}

/// Result of a multistart rank-one search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank1Search {
    pub best: CPModel,
    /// Objectives of the distinct converged models, ascending.
    pub distinct_objectives: Vec<f64>,
    /// Second smallest minus smallest distinct objective; `None` when
    /// every start reached the same model.
    pub gap: Option<f64>,
}

fn start_factors(t: &DenseTensor, i: usize, seed: u64) -> Vec<Vec<f64>> {
    let layout = CpLayout::new(t.shape(), 1);
    if i == 0 {
        let theta = cp::hosvd_params(t, 1);
        return (0..t.order()).map(|m| {
            let f = layout.factor(&theta, 0, m);
            linalg::scaled(f, 1.0 / linalg::norm(f))
        }).collect();
    }
    let mut r = rng::task(seed, i);
    t.shape().iter().map(|&m| rng::unit_vec(&mut r, m)).collect()
}

fn summarize(models: Vec<CPModel>, starts: usize) -> Result<Rank1Search> {
    let mut best: Option<CPModel> = None;
    let mut distinct: Vec<(Vec<f64>, f64)> = Vec::new();
    for m in models.into_iter().filter(|m| m.converged) {
        let y = m.dense().into_data();
        if distinct.iter().all(|(z, _)| linalg::dist(z, &y) > DEDUP_TOL) {
            distinct.push((y, m.objective));
        }
        if best.as_ref().is_none_or(|b| m.objective < b.objective) {
            best = Some(m);
        }
    }
    let best = best.ok_or(Error::NotConverged { starts })?;
    let mut objs: Vec<f64> = distinct.into_iter().map(|(_, o)| o).collect();
    objs.sort_by(f64::total_cmp);
    let gap = objs.get(1).map(|o| o - objs[0]);
    Ok(Rank1Search { best, distinct_objectives: objs, gap })
}

/// Multistart rank-one ALS. Start 0 uses the leading singular vectors of
/// the unfoldings, start `i > 0` random unit factors seeded with
/// `seed + i`. Every run is polished to a stationary point.
pub fn rank1_search(t: &DenseTensor, starts: usize, seed: u64) -> Result<Rank1Search> {
    if starts == 0 {
        return invalid("starts must be >= 1");
    }
    if !t.data().iter().all(|v| v.is_finite()) {
        return invalid("tensor must be finite");
    }
    if t.norm() == 0.0 {
        let factors = t.shape().iter().map(|&m| {
            let mut e = vec![0.0; m];
            e[0] = 1.0;
            e
        }).collect();
        let best = CPModel {
            terms: vec![RankOneTerm { weight: 0.0, factors }],
            objective: 0.0,
            iterations: 0,
            converged: true,
            history: vec![0.0],
            stationarity: 0.0,
            border_rank_escape: false,
            start: 0,
        };
        return Ok(Rank1Search { best, distinct_objectives: vec![0.0], gap: None });
    }
    let models: Vec<CPModel> = (0..starts)
        .into_par_iter()
        .filter_map(|i| als_rank1(t, start_factors(t, i, seed), i))
        .collect();
    summarize(models, starts)
}

/// Best rank-one approximation among `starts` ALS runs.
pub fn best_rank1(t: &DenseTensor, starts: usize, seed: u64) -> Result<CPModel> {
    Ok(rank1_search(t, starts, seed)?.best)
}

/// `S(u, ..., u, ., .)` as an `m x m` matrix and `S(u, ..., u, .)`.
fn partial_contractions(data: &[f64], m: usize, d: usize, u: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let rest: Vec<f64> = (0..d - 2).fold(vec![1.0], |acc, _| acc.iter().flat_map(|a| u.iter().map(move |b| a * b)).collect());
    let block = rest.len();
    let h = DMatrix::from_fn(m, m, |a, b| {
        let o = (a * m + b) * block;
        linalg::dot(&data[o..o + block], &rest)
    });
    let g: Vec<f64> = (&h * DVector::from_column_slice(u)).iter().copied().collect();
    (h, g)
}

/// Shifted symmetric power iteration for a maximizer (`sign = 1`) or a
/// minimizer (`sign = -1`) of `S(u, ..., u)` on the unit sphere, followed
/// by Newton's method on `S(u, ..., u, .) = lambda u, |u| = 1`.
fn sshopm(data: &[f64], m: usize, d: usize, mut u: Vec<f64>, sign: f64, shift: f64) -> (Vec<f64>, f64, usize) {
    let mut lambda = f64::NAN;
    let mut iters = 0;
    while iters < ALS_MAX_SWEEPS {
        iters += 1;
        let (_, g) = partial_contractions(data, m, d, &u);
        let l = linalg::dot(&g, &u);
        let next: Vec<f64> = g.iter().zip(&u).map(|(gi, ui)| sign * gi + shift * ui).collect();
        let n = linalg::norm(&next);
        if !(n > 0.0) {
            break;
        }
        u = linalg::scaled(&next, 1.0 / n);
        if (l - lambda).abs() <= ALS_REL_TOL * l.abs().max(1e-300) {
            break;
        }
        lambda = l;
    }
    for _ in 0..20 {
        let (h, g) = partial_contractions(data, m, d, &u);
        let l = linalg::dot(&g, &u);
        let mut jac = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for a in 0..m {
            for b in 0..m {
                jac[(a, b)] = (d as f64 - 1.0) * h[(a, b)];
            }
            jac[(a, a)] -= l;
            jac[(a, m)] = -u[a];
            jac[(m, a)] = -u[a];
            rhs[a] = -(g[a] - l * u[a]);
        }
        rhs[m] = -(1.0 - linalg::dot(&u, &u)) / 2.0;
        let res = rhs.norm();
        if res <= 1e-15 * (1.0 + l.abs()) {
            break;
        }
        let step = match jac.lu().solve(&rhs) {
            Some(s) => s,
            None => break,
        };
        let cand: Vec<f64> = u.iter().enumerate().map(|(a, v)| v + step[a]).collect();
        let cn = linalg::norm(&cand);
        let cand = linalg::scaled(&cand, 1.0 / cn);
        let (_, gc) = partial_contractions(data, m, d, &cand);
        let lc = linalg::dot(&gc, &cand);
        let rc: f64 = gc.iter().zip(&cand).map(|(gi, ci)| (gi - lc * ci).powi(2)).sum::<f64>().sqrt();
        let r0: f64 = g.iter().zip(&u).map(|(gi, ui)| (gi - l * ui).powi(2)).sum::<f64>().sqrt();
        if rc >= r0 {
            break;
        }
        u = cand;
    }
    let (_, g) = partial_contractions(data, m, d, &u);
    (u.clone(), linalg::dot(&g, &u), iters)
}

/// Best symmetric rank-one approximation `lambda u^{(x) d}` of a symmetric
/// tensor among `starts` shifted power iterations (start `i` seeded with
/// `seed + i`; for even `d` odd starts look for the most negative
/// `lambda`).
pub fn best_rank1_symmetric(s: &SymTensor, starts: usize, seed: u64) -> Result<CPModel> {
    if starts == 0 {
        return invalid("starts must be >= 1");
    }
    let (m, d) = (s.m(), s.d());
    if d < 2 {
        return invalid("symmetric rank-one approximation needs order >= 2");
    }
    let dense = s.densify();
    let data = dense.data();
    let tn = dense.norm();
    let shift = (d as f64 - 1.0) * tn;
    let layout = CpLayout::new(dense.shape(), 1);
    let models: Vec<CPModel> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::task(seed, i);
            let u0 = rng::unit_vec(&mut r, m);
            let sign = if d % 2 == 0 && i % 2 == 1 { -1.0 } else { 1.0 };
            let (u, lambda, iterations) = sshopm(data, m, d, u0, sign, shift);
            let term = RankOneTerm { weight: lambda, factors: vec![u; d] };
            let y = term.dense();
            let objective = linalg::dist(data, y.data());
            let theta = layout.from_terms(std::slice::from_ref(&term));
            let stationarity = cp::tangent_residual(&layout, &theta, data);
            CPModel {
                terms: vec![term],
                objective,
                iterations,
                converged: stationarity <= RANK1_STATIONARITY_TOL * tn.max(1.0),
                history: vec![objective],
                stationarity,
                border_rank_escape: false,
                start: i,
            }
        })
        .collect();
    let mut best: Option<CPModel> = None;
    for m in models.into_iter().filter(|m| m.converged) {
        if best.as_ref().is_none_or(|b| m.objective < b.objective) {
            best = Some(m);
        }
    }
    best.ok_or(Error::NotConverged { starts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::symmetrize;

    #[test]
    fn rank_one_input() {
        let t = DenseTensor::diagonal(3, &[2.0, 0.0]);
        let m = best_rank1(&t, 5, 1).unwrap();
        assert!((m.terms[0].weight.abs() - 2.0).abs() < 1e-12);
        assert!(m.objective < 1e-12);
    }

    #[test]
    fn diagonal_symmetric() {
        let t = DenseTensor::diagonal(3, &[3.0, 1.0]);
        let m = best_rank1(&t, 20, 2).unwrap();
        assert!((m.terms[0].weight.abs() - 3.0).abs() < 1e-12);
        assert!((m.objective - 1.0).abs() < 1e-12);
        let s = symmetrize(&t).unwrap();
        let ms = best_rank1_symmetric(&s, 20, 2).unwrap();
        assert!((ms.terms[0].weight - 3.0).abs() < 1e-12);
        assert!((ms.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eckart_young_rank_one() {
        let t = DenseTensor::matrix(2, 2, &[3.0, 0.0, 0.0, 2.0]).unwrap();
        let m = best_rank1(&t, 5, 0).unwrap();
        assert!((m.objective - 2.0).abs() < 1e-12);
        assert!((m.terms[0].weight.abs() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_power_recovered() {
        let u = vec![0.6, 0.0, 0.8];
        let s = SymTensor::power(1.0, &u, 3);
        let m = best_rank1_symmetric(&s, 4, 0).unwrap();
        assert!(m.objective < 1e-12);
        assert!(super::super::line_angle(&m.terms[0].factors[0], &u) < 1e-12);
    }

    #[test]
    fn even_order_negative_definite() {
        let t = DenseTensor::diagonal(4, &[-3.0, 1.0]);
        let s = symmetrize(&t).unwrap();
        let ms = best_rank1_symmetric(&s, 10, 0).unwrap();
        assert!((ms.terms[0].weight + 3.0).abs() < 1e-12);
        let m = best_rank1(&t, 10, 0).unwrap();
        assert!((m.objective - ms.objective).abs() < 1e-12);
    }
}
