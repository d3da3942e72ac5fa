mod common;

use edcrit::approx::{
    self, best_rank1, best_rank1_symmetric, best_rank_k, match_terms, random_symmetric, symmetry_verdict, CPModel,
};
use edcrit::rng;
use edcrit::tensor::{self, symmetrize, DenseTensor, RankOneTerm, SymTensor};
use edcrit::Error;
use nalgebra::DMatrix;

fn e(i: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn model(terms: Vec<RankOneTerm>) -> CPModel {
    CPModel {
        terms,
        objective: 0.0,
        iterations: 0,
        converged: true,
        history: vec![],
        stationarity: 0.0,
        border_rank_escape: false,
        start: 0,
    }
}

fn random_orthogonal(r: &mut rng::Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_vec(n, n, rng::gaussian_vec(r, n * n)).qr().q()
}

#[test]
fn rank_one_examples() {
    let t = DenseTensor::diagonal(3, &[2.0, 0.0]);
    let m = best_rank1(&t, 5, 0).unwrap();
    assert!((m.terms[0].weight.abs() - 2.0).abs() < 1e-12);
    assert!(m.objective < 1e-12);

    let t = DenseTensor::diagonal(3, &[3.0, 1.0]);
    for starts in [20, 400] {
        let m = best_rank1(&t, starts, 1).unwrap();
        assert!((m.objective - 1.0).abs() < 1e-10, "{}", m.objective);
        assert!((m.terms[0].weight.abs() - 3.0).abs() < 1e-10);
        assert!(m.terms[0].factors.iter().all(|f| (f[0].abs() - 1.0).abs() < 1e-8));
    }

    let m = best_rank1(&DenseTensor::matrix(2, 2, &[3.0, 0.0, 0.0, 2.0]).unwrap(), 5, 0).unwrap();
    assert!((m.terms[0].weight.abs() - 3.0).abs() < 1e-10);
    assert!((m.objective - 2.0).abs() < 1e-10);
    assert!(best_rank1(&t, 0, 0).is_err());
}

#[test]
fn symmetric_rank_one_examples() {
    let u = vec![0.6, 0.0, 0.8];
    let s = SymTensor::power(1.0, &u, 3);
    let m = best_rank1_symmetric(&s, 5, 0).unwrap();
    assert!(m.objective < 1e-12);
    assert!((m.terms[0].weight.abs() - 1.0).abs() < 1e-12);
    assert!(approx::line_angle(&m.terms[0].factors[0], &u) < 1e-8);
    assert!(symmetry_verdict(&m).is_symmetric);

    let d = symmetrize(&DenseTensor::diagonal(3, &[3.0, 1.0])).unwrap();
    let m = best_rank1_symmetric(&d, 10, 0).unwrap();
    assert!((m.objective - 1.0).abs() < 1e-10);
    assert!(approx::line_angle(&m.terms[0].factors[0], &e(0, 2)) < 1e-8);
}

#[test]
fn symmetric_and_free_objectives_agree() {
    for trial in 0..10 {
        let s = rng::trial_seed(11, trial);
        let t = random_symmetric(3, 3, &mut rng::seeded(s));
        let free = best_rank1(&t, 20, s).unwrap();
        let sym = best_rank1_symmetric(&symmetrize(&t).unwrap(), 20, s).unwrap();
        assert!((free.objective - sym.objective).abs() <= 1e-9, "trial {trial}");
        assert!(free.objective <= t.norm());
    }
}

#[test]
fn rank_k_examples() {
    let m = best_rank_k(&DenseTensor::diagonal(3, &[2.0, 1.0]), 2, 5, 0).unwrap();
    assert!(m.objective <= 1e-10);
    let m = best_rank_k(&DenseTensor::matrix(3, 3, &[3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]).unwrap(), 2, 10, 0).unwrap();
    assert!((m.objective - 1.0).abs() < 1e-9);
    assert!(m.stationarity <= 1e-6);
    assert!(best_rank_k(&DenseTensor::diagonal(3, &[2.0, 1.0]), 0, 5, 0).is_err());
}

#[test]
fn rank_k_matches_eckart_young() {
    for trial in 0..10 {
        let mut r = rng::seeded(rng::trial_seed(12, trial));
        let x = rng::gaussian_vec(&mut r, 12);
        let sv = common::singular_values(3, 4, &x);
        for k in 1..=2 {
            let m = best_rank_k(&DenseTensor::matrix(3, 4, &x).unwrap(), k, 10, trial as u64).unwrap();
            assert!((m.objective - common::eckart_young(&sv, k)).abs() <= 1e-9, "trial {trial} k {k}");
        }
    }
}

#[test]
fn history_is_nonincreasing() {
    for trial in 0..5 {
        let s = rng::trial_seed(13, trial);
        let t = DenseTensor::new(vec![2, 3, 2], rng::gaussian_vec(&mut rng::seeded(s), 12)).unwrap();
        for m in [best_rank1(&t, 5, s).unwrap(), best_rank_k(&t, 2, 5, s).unwrap()] {
            assert!(m.history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * (1.0 + t.norm())), "{:?}", m.history);
            assert!(m.objective >= 0.0);
        }
    }
}

#[test]
fn noisy_certified_tensor_is_recovered() {
    for trial in 0..3 {
        let s = rng::trial_seed(14, trial);
        let mut r = rng::seeded(s);
        let (planted, _) = approx::plant_certified(3, 3, 3, &mut r).unwrap();
        let planted: Vec<RankOneTerm> = planted.iter().map(|p| p.to_rank_one(3)).collect();
        let t = tensor::sum_terms(&planted).unwrap();
        let noise = DenseTensor::new(vec![3, 3, 3], rng::gaussian_vec(&mut r, 27)).unwrap();
        let t = t.add(&noise.scale(1e-3 / noise.norm())).unwrap();
        let m = best_rank_k(&t, 3, 20, s).unwrap();
        assert!(match_terms(&m.terms, &planted) <= 1e-2, "trial {trial}");
    }
}

#[test]
fn objective_invariant_under_orthogonal_action() {
    let mut r = rng::seeded(15);
    let t = DenseTensor::new(vec![3, 3, 3], rng::gaussian_vec(&mut r, 27)).unwrap();
    let base = best_rank1(&t, 30, 0).unwrap().objective;
    for _ in 0..20 {
        let q = random_orthogonal(&mut r, 3);
        let moved = t.multilinear(&[q.clone(), q.clone(), q]).unwrap();
        let obj = best_rank1(&moved, 30, 0).unwrap().objective;
        assert!((obj - base).abs() <= 1e-8, "{obj} vs {base}");
    }
}

#[test]
fn verdict_examples() {
    let u = vec![0.6, 0.8];
    let v = symmetry_verdict(&model(vec![RankOneTerm::new(1.0, vec![u.clone(); 3]).unwrap()]));
    assert!(v.is_symmetric);
    assert!(v.max_factor_angle < 1e-12);
    assert!(v.orbit_collapsed);

    let v = symmetry_verdict(&model(vec![RankOneTerm::new(1.0, vec![e(0, 2), e(1, 2), e(0, 2)]).unwrap()]));
    assert!(!v.is_symmetric);
    assert!((v.max_factor_angle - std::f64::consts::FRAC_PI_2).abs() < 1e-15);

    let a = vec![vec![1.0, 0.2], vec![0.3, 1.0], vec![-1.0, 0.5]];
    let mut b = a.clone();
    b.rotate_left(1);
    let va = symmetry_verdict(&model(vec![RankOneTerm::new(1.0, a).unwrap()]));
    let vb = symmetry_verdict(&model(vec![RankOneTerm::new(1.0, b).unwrap()]));
    assert_eq!(va.is_symmetric, vb.is_symmetric);
    assert!((va.max_factor_angle - vb.max_factor_angle).abs() < 1e-15);
}

#[test]
fn experiments_respect_the_certified_regime() {
    assert!(matches!(approx::experiment_thm72(2, 3, 3, 0.0, 1, 1, 0), Err(Error::OutsideCertifiedRegime(_))));
    let s = approx::experiment_thm71(2, 3, 10, 10, 3).unwrap();
    assert!(s.fraction_symmetric >= 0.9);
    let s = approx::experiment_thm72(2, 3, 2, 1e-4, 5, 10, 3).unwrap();
    assert_eq!(s.rows.len(), 5);
    assert!(s.fraction_symmetric >= 0.8);
}
