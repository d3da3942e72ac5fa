use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{best_rank_k, match_terms, rank1_search, symmetry_verdict};
use crate::error::{invalid, Error, Result};
use crate::kruskal::{certify_symmetric_rank, n_bound, Rational};
use crate::rng;
use crate::tensor::{symmetrize, DenseTensor, RankOneTerm, SymRankOneTerm};
use crate::variety::UNIQUENESS_TOL;

/// Planted terms must be recovered to within this factor angle.
pub const RECOVERY_TOL: f64 = 1e-2;
const MAX_REJECTIONS: usize = 1000;

/// `densify(symmetrize(G))` for a standard Gaussian tensor `G`.
pub fn random_symmetric(m: usize, d: usize, rng: &mut rng::Rng) -> DenseTensor {
    let shape = vec![m; d];
    let len = m.pow(d as u32);
    let g = DenseTensor::new(shape, rng::gaussian_vec(rng, len)).expect("length matches shape");
    symmetrize(&g).expect("cubical").densify()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm71Row {
    pub trial: usize,
    pub seed: u64,
    pub objective: f64,
    pub symmetric: bool,
    pub max_factor_angle: f64,
    /// Gap between the two best distinct critical values; empty when all
    /// starts agree.
    pub gap: Option<f64>,
    pub unique: bool,
    pub escape: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm71Summary {
    pub m: usize,
    pub d: usize,
    pub trials: usize,
    pub starts: usize,
    pub seed: u64,
    pub fraction_symmetric: f64,
    pub fraction_unique: f64,
    pub min_gap: Option<f64>,
    pub rows: Vec<Thm71Row>,
}

fn check_small(m: usize, d: usize, trials: usize, starts: usize) -> Result<()> {
    if !(2..=4).contains(&m) || !(2..=5).contains(&d) {
        return invalid(format!("experiment supports 2 <= m <= 4 and 2 <= d <= 5, got m={m}, d={d}"));
    }
    if trials == 0 || starts == 0 {
        return invalid("trials and starts must be >= 1");
    }
    Ok(())
}

/// For random symmetric tensors, whether the unconstrained best rank-one
/// approximation is symmetric and unique. Trial `i` uses the derived seed
/// `trial_seed(seed, i)` for both the sample and the search.
pub fn experiment_thm71(m: usize, d: usize, trials: usize, starts: usize, seed: u64) -> Result<Thm71Summary> {
    check_small(m, d, trials, starts)?;
    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let s = rng::trial_seed(seed, trial);
            let t = random_symmetric(m, d, &mut rng::seeded(s));
            let search = rank1_search(&t, starts, s)?;
            let v = symmetry_verdict(&search.best);
            Ok(Thm71Row {
                trial,
                seed: s,
                objective: search.best.objective,
                symmetric: v.is_symmetric,
                max_factor_angle: v.max_factor_angle,
                gap: search.gap,
                unique: search.gap.is_none_or(|g| g > UNIQUENESS_TOL),
                escape: search.best.border_rank_escape,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    Ok(Thm71Summary {
        m,
        d,
        trials,
        starts,
        seed,
        fraction_symmetric: rows.iter().filter(|r| r.symmetric).count() as f64 / n,
        fraction_unique: rows.iter().filter(|r| r.unique).count() as f64 / n,
        min_gap: rows.iter().filter_map(|r| r.gap).reduce(f64::min),
        rows,
    })
}

/// A random decomposition `sum_j t_j u_j^{(x) d}` with `t_j = +-1` and unit
/// `u_j`, resampled until its rank certificate passes. Returns the terms
/// and the number of rejected draws.
pub fn plant_certified(m: usize, d: usize, k: usize, rng: &mut rng::Rng) -> Result<(Vec<SymRankOneTerm>, usize)> {
    for rejected in 0..MAX_REJECTIONS {
        let terms: Vec<SymRankOneTerm> = (0..k)
            .map(|_| {
                let u = rng::unit_vec(rng, m);
                let sign = if rng::gaussian(rng) < 0.0 { -1.0 } else { 1.0 };
                SymRankOneTerm::new(sign, u)
            })
            .collect::<Result<_>>()?;
        if certify_symmetric_rank(&terms, m, d)?.srank_certified.is_some() {
            return Ok((terms, rejected));
        }
    }
    Err(Error::OutsideCertifiedRegime(format!("no certified rank-{k} decomposition in {MAX_REJECTIONS} draws")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm72Row {
    pub trial: usize,
    pub seed: u64,
    pub objective: f64,
    pub symmetric: bool,
    pub max_factor_angle: f64,
    pub recovery_angle: f64,
    pub recovered: bool,
    pub escape: bool,
    pub rejections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm72Summary {
    pub m: usize,
    pub d: usize,
    pub k: usize,
    pub noise: f64,
    pub trials: usize,
    pub starts: usize,
    pub seed: u64,
    /// Term-count bound, as a fraction `"p/q"`.
    pub bound: String,
    pub fraction_symmetric: f64,
    pub fraction_recovered: f64,
    pub escapes: usize,
    pub max_objective: f64,
    pub rows: Vec<Thm72Row>,
}

/// Plants a certified symmetric rank-`k` tensor, adds symmetric Gaussian
/// noise of Frobenius norm `noise`, and checks whether the unconstrained
/// best rank-`k` candidate is symmetric and matches the planted terms.
pub fn experiment_thm72(
    m: usize,
    d: usize,
    k: usize,
    noise: f64,
    trials: usize,
    starts: usize,
    seed: u64,
) -> Result<Thm72Summary> {
    check_small(m, d, trials, starts)?;
    if !(noise >= 0.0) || !noise.is_finite() {
        return invalid("noise must be finite and nonnegative");
    }
    let bound = n_bound(m, d)?;
    if k < 2 || Rational::from_integer(k as i64) > bound {
        return Err(Error::OutsideCertifiedRegime(format!(
            "k={k} must satisfy 2 <= k <= N({m},{d}) = {}/{}",
            bound.numer(),
            bound.denom()
        )));
    }
    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let s = rng::trial_seed(seed, trial);
            let mut r = rng::seeded(s);
            let (planted, rejections) = plant_certified(m, d, k, &mut r)?;
            let planted: Vec<RankOneTerm> = planted.iter().map(|p| p.to_rank_one(d)).collect();
            let mut t = crate::tensor::sum_terms(&planted)?;
            if noise > 0.0 {
                let e = random_symmetric(m, d, &mut r);
                t = t.add(&e.scale(noise / e.norm()))?;
            }
            let model = best_rank_k(&t, k, starts, s)?;
            let v = symmetry_verdict(&model);
            let recovery_angle = match_terms(&model.terms, &planted);
            Ok(Thm72Row {
                trial,
                seed: s,
                objective: model.objective,
                symmetric: v.is_symmetric,
                max_factor_angle: v.max_factor_angle,
                recovery_angle,
                recovered: recovery_angle <= RECOVERY_TOL,
                escape: model.border_rank_escape,
                rejections,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    Ok(Thm72Summary {
        m,
        d,
        k,
        noise,
        trials,
        starts,
        seed,
        bound: format!("{}/{}", bound.numer(), bound.denom()),
        fraction_symmetric: rows.iter().filter(|r| r.symmetric).count() as f64 / n,
        fraction_recovered: rows.iter().filter(|r| r.recovered).count() as f64 / n,
        escapes: rows.iter().filter(|r| r.escape).count(),
        max_objective: rows.iter().map(|r| r.objective).fold(0.0, f64::max),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_symmetric_is_symmetric() {
        let t = random_symmetric(3, 3, &mut rng::seeded(0));
        assert!(t.is_symmetric(1e-14));
    }

    #[test]
    fn outside_regime_is_rejected() {
        assert!(matches!(experiment_thm72(2, 3, 3, 0.0, 1, 1, 0), Err(Error::OutsideCertifiedRegime(_))));
        assert!(matches!(experiment_thm72(2, 3, 1, 0.0, 1, 1, 0), Err(Error::OutsideCertifiedRegime(_))));
    }

    #[test]
    fn small_thm71_run() {
        let s = experiment_thm71(2, 3, 5, 10, 1).unwrap();
        assert_eq!(s.rows.len(), 5);
        assert_eq!(s.fraction_symmetric, 1.0);
    }

    #[test]
    fn exact_recovery_at_zero_noise() {
        let s = experiment_thm72(2, 3, 2, 0.0, 3, 5, 4).unwrap();
        assert!(s.max_objective <= 1e-10, "{s:?}");
        assert_eq!(s.fraction_recovered, 1.0);
    }
}
