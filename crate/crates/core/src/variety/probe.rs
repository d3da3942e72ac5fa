use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    constraint_residual, critical_set, CriticalReport, VarietySpec, DEDUP_TOL, ON_VARIETY_TOL, UNIQUENESS_TOL,
};
use crate::error::{invalid, Result};
use crate::linalg;
use crate::rng;
use crate::tensor::DenseTensor;

/// Multistart budget used by the probes on tensor varieties.
pub const PROBE_STARTS: usize = 100;

/// `true` iff the diagonal quadric `sum a_i y_i^2` meets the isotropic
/// quadric transversally, i.e. the coefficients are pairwise distinct.
pub fn quadric_transversality(a: &[f64]) -> Result<bool> {
    if a.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return invalid("quadric coefficients must be finite and nonzero");
    }
    let mut s = a.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s.windows(2).all(|w| w[0] != w[1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub trials: usize,
    pub seed: u64,
    pub max_ratio: f64,
    /// `|dist(x) - dist(z)| / ||x - z||` per pair, 0 when `x = z`.
    pub ratios: Vec<f64>,
}

fn distance(v: &VarietySpec, x: &[f64], seed: u64) -> Result<f64> {
    Ok(critical_set(v, x, PROBE_STARTS, seed)?.best_distance())
}

/// Samples `trials` query pairs and measures how much the distance to `v`
/// can change relative to the distance between the queries. Even trials
/// draw two independent Gaussian queries, odd trials a query and a nearby
/// perturbation of it.
pub fn lipschitz_probe(v: &VarietySpec, trials: usize, seed: u64) -> Result<LipschitzReport> {
    if trials == 0 {
        return invalid("trials must be >= 1");
    }
    let n = v.ambient_dim();
    let ratios = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = rng::trial_seed(seed, t);
            let mut r = rng::seeded(s);
            let x = rng::gaussian_vec(&mut r, n);
            let z = if t % 2 == 0 {
                rng::gaussian_vec(&mut r, n)
            } else {
                let e = rng::gaussian_vec(&mut r, n);
                x.iter().zip(&e).map(|(a, b)| a + 1e-2 * b).collect()
            };
            pair_ratio(v, &x, &z, s)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(LipschitzReport { trials, seed, max_ratio, ratios })
}

/// `|dist(x, C) - dist(z, C)| / ||x - z||`, defined as 0 when `x = z`.
pub fn pair_ratio(v: &VarietySpec, x: &[f64], z: &[f64], seed: u64) -> Result<f64> {
    let gap = linalg::dist(x, z);
    if gap == 0.0 {
        v.check_point(x, "query")?;
        return Ok(0.0);
    }
    Ok((distance(v, x, seed)? - distance(v, z, seed)?).abs() / gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub trials: usize,
    pub seed: u64,
    /// Queries that lay on the variety and were skipped.
    pub excluded: usize,
    /// Fraction of the remaining queries with gap above the uniqueness
    /// tolerance; 1 when every query was excluded.
    pub fraction_unique: f64,
    pub min_gap: Option<f64>,
    pub rows: Vec<UniquenessRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessRow {
    pub trial: usize,
    pub seed: u64,
    pub on_variety: bool,
    /// Empty when the query is on the variety or has a single critical
    /// point.
    pub gap: Option<f64>,
    pub unique: bool,
}

/// Gap between the two smallest critical distances for query `x`, or
/// `None` if `x` lies on the variety. A single critical point gives an
/// infinite gap.
pub fn uniqueness_gap(v: &VarietySpec, x: &[f64], seed: u64) -> Result<Option<f64>> {
    if constraint_residual(v, x)? <= ON_VARIETY_TOL {
        return Ok(None);
    }
    let report = critical_set(v, x, PROBE_STARTS, seed)?;
    Ok(Some(report.uniqueness_gap.unwrap_or(f64::INFINITY)))
}

/// Fraction of Gaussian queries whose nearest critical point beats the
/// runner-up by more than [`UNIQUENESS_TOL`].
pub fn uniqueness_probe(v: &VarietySpec, trials: usize, seed: u64) -> Result<UniquenessReport> {
    if trials == 0 {
        return invalid("trials must be >= 1");
    }
    let n = v.ambient_dim();
    let gaps = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = rng::trial_seed(seed, t);
            let x = rng::gaussian_vec(&mut rng::seeded(s), n);
            uniqueness_gap(v, &x, s)
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    let used: Vec<f64> = gaps.iter().flatten().copied().collect();
    let excluded = trials - used.len();
    let unique = used.iter().filter(|&&g| g > UNIQUENESS_TOL).count();
    let fraction_unique = if used.is_empty() { 1.0 } else { unique as f64 / used.len() as f64 };
    let min_gap = used.iter().copied().filter(|g| g.is_finite()).reduce(f64::min);
    let rows = gaps
        .iter()
        .enumerate()
        .map(|(trial, g)| UniquenessRow {
            trial,
            seed: rng::trial_seed(seed, trial),
            on_variety: g.is_none(),
            gap: g.filter(|x| x.is_finite()),
            unique: g.is_some_and(|x| x > UNIQUENESS_TOL),
        })
        .collect();
    Ok(UniquenessReport { trials, seed, excluded, fraction_unique, min_gap, rows })
}

/// For a symmetric query `x` on a cubical tensor variety, checks that the
/// reported critical set is closed under every transposition of two modes.
/// Returns `false` when the variety is not a cubical tensor variety or `x`
/// is not symmetric.
pub fn orbit_closure_check(v: &VarietySpec, x: &DenseTensor, report: &CriticalReport) -> bool {
    let shape = match v.tensor_shape() {
        Some(s) => s.to_vec(),
        None => return false,
    };
    if shape.iter().any(|&m| m != shape[0]) || x.shape() != shape.as_slice() || !x.is_symmetric(1e-12) {
        return false;
    }
    let d = shape.len();
    let points: Vec<&[f64]> = report.all_points().map(|p| p.y.as_slice()).collect();
    points.iter().all(|y| {
        let t = DenseTensor::new(shape.clone(), y.to_vec()).expect("report points match the variety");
        (0..d).all(|i| {
            (i + 1..d).all(|j| {
                let s = t.transpose_modes(i, j).expect("valid modes");
                points.iter().any(|q| linalg::dist(s.data(), q) <= DEDUP_TOL)
            })
        })
    })
}
