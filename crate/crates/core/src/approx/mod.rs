//! Best rank-one and rank-`k` approximation of real tensors by multistart
//! alternating least squares, the symmetric rank-one problem by shifted
//! symmetric power iteration, and the experiments on symmetry and
//! uniqueness of best approximations of symmetric tensors.

mod experiment;
mod rank1;
mod rankk;

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::tensor::{sum_terms, DenseTensor, RankOneTerm};

pub use experiment::{
    experiment_thm71, experiment_thm72, plant_certified, random_symmetric, Thm71Row, Thm71Summary, Thm72Row,
    Thm72Summary,
};
pub use rank1::{best_rank1, best_rank1_symmetric, rank1_search, Rank1Search};
pub use rankk::best_rank_k;

/// Largest factor angle for a term to count as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-6;
/// ALS stops once the objective changes by less than this fraction.
pub const ALS_REL_TOL: f64 = 1e-12;
pub const ALS_MAX_SWEEPS: usize = 500;
/// Rank-one models must be stationary to this tolerance (relative to
/// `max(1, ||T||)`).
pub const RANK1_STATIONARITY_TOL: f64 = 1e-8;
/// Rank-`k` models count as stationary below this tolerance.
pub const RANKK_STATIONARITY_TOL: f64 = 1e-6;
/// A term weight above this multiple of `max(1, ||T||)` signals that the
/// iterates are escaping to a border-rank limit.
pub const ESCAPE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CPModel {
    pub terms: Vec<RankOneTerm>,
    /// `||T - sum terms||`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every sweep.
    pub history: Vec<f64>,
    /// Norm of the tangential part of the residual at the model.
    pub stationarity: f64,
    pub border_rank_escape: bool,
    /// Index of the start that produced the model.
    pub start: usize,
}

impl CPModel {
    pub fn dense(&self) -> DenseTensor {
        sum_terms(&self.terms).expect("model has at least one term")
    }
}

/// Angle between the lines spanned by unit vectors `a` and `b`, computed
/// without the cancellation of `acos` near 0.
pub fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return std::f64::consts::FRAC_PI_2;
    }
    let minus = linalg::dist(a, b);
    let plus = a.iter().zip(b).map(|(x, y)| (x + y).powi(2)).sum::<f64>().sqrt();
    2.0 * (minus.min(plus) / 2.0).min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryVerdict {
    pub is_symmetric: bool,
    /// Largest angle between two factors of the same term.
    pub max_factor_angle: f64,
    /// The model tensor is fixed by every permutation of the modes.
    pub orbit_collapsed: bool,
}

/// Whether every term of `model` has collinear factors.
pub fn symmetry_verdict(model: &CPModel) -> SymmetryVerdict {
    let mut angle: f64 = 0.0;
    for t in &model.terms {
        for (i, a) in t.factors.iter().enumerate() {
            for b in &t.factors[i + 1..] {
                angle = angle.max(line_angle(a, b));
            }
        }
    }
    let orbit_collapsed = !model.terms.is_empty() && {
        let y = model.dense();
        y.is_symmetric(SYMMETRY_TOL * y.norm().max(1.0))
    };
    SymmetryVerdict { is_symmetric: angle <= SYMMETRY_TOL, max_factor_angle: angle, orbit_collapsed }
}

fn term_angle(a: &RankOneTerm, b: &RankOneTerm) -> f64 {
    if a.order() != b.order() {
        return std::f64::consts::FRAC_PI_2;
    }
    a.factors.iter().zip(&b.factors).map(|(x, y)| line_angle(x, y)).fold(0.0, f64::max)
}

/// Greedy matching of `found` terms to `planted` terms by smallest factor
/// angle (largest cosine); returns the largest matched angle, or `pi/2`
/// when the term counts differ.
pub fn match_terms(found: &[RankOneTerm], planted: &[RankOneTerm]) -> f64 {
    if found.len() != planted.len() || found.is_empty() {
        return std::f64::consts::FRAC_PI_2;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, f) in found.iter().enumerate() {
        for (j, p) in planted.iter().enumerate() {
            pairs.push((term_angle(f, p), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_f = vec![false; found.len()];
    let mut used_p = vec![false; planted.len()];
    let mut worst: f64 = 0.0;
    for (a, i, j) in pairs {
        if !used_f[i] && !used_p[j] {
            used_f[i] = true;
            used_p[j] = true;
            worst = worst.max(a);
        }
    }
    worst
}
