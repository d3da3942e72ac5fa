mod common;

use edcrit::rng;
use edcrit::tensor::{symmetrize, DenseTensor};
use edcrit::variety::{
    self, critical_residual, critical_set, lipschitz_probe, orbit_closure_check, pair_ratio, quadric_transversality,
    uniqueness_probe, StratumTree, VarietyKind, VarietySpec,
};
use edcrit::Error;

fn span_e1() -> VarietySpec {
    VarietySpec::new(VarietyKind::Subspace { n: 2, r: 1, basis: vec![1.0, 0.0] }).unwrap()
}

fn diag(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    (0..n * n).map(|i| if i % (n + 1) == 0 { d[i / (n + 1)] } else { 0.0 }).collect()
}

#[test]
fn residual_examples() {
    let v = span_e1();
    assert_eq!(critical_residual(&v, &[3.0, 4.0], &[3.0, 0.0]).unwrap(), 0.0);
    assert_eq!(critical_residual(&v, &[3.0, 4.0], &[0.0, 0.0]).unwrap(), 3.0);
    assert!(matches!(critical_residual(&v, &[3.0, 4.0], &[1.0, 1.0]), Err(Error::OffVariety { .. })));

    let m = VarietySpec::matrix_rank(2, 2, 1).unwrap();
    assert!(critical_residual(&m, &diag(&[3.0, 2.0]), &diag(&[3.0, 0.0])).unwrap() < 1e-15);
    assert!(matches!(critical_residual(&m, &diag(&[3.0, 2.0]), &[0.0; 4]), Err(Error::SingularPoint { .. })));
}

#[test]
fn subspace_critical_point_is_projection() {
    let rep = critical_set(&span_e1(), &[3.0, 4.0], 1, 0).unwrap();
    assert_eq!(rep.points.len(), 1);
    assert_eq!(rep.delta_estimate, 1);
    assert_eq!(rep.best.y, vec![3.0, 0.0]);
    assert_eq!(rep.best_distance(), 4.0);
    assert_eq!(rep.uniqueness_gap, None);

    for trial in 0..20 {
        let mut r = rng::seeded(rng::trial_seed(3, trial));
        let (n, k) = (5, 2);
        let basis = rng::gaussian_vec(&mut r, n * k);
        let v = VarietySpec::new(VarietyKind::Subspace { n, r: k, basis: basis.clone() }).unwrap();
        let x = rng::gaussian_vec(&mut r, n);
        let cols: Vec<Vec<f64>> = (0..k).map(|j| (0..n).map(|i| basis[i * k + j]).collect()).collect();
        let want = common::project(&cols, &x);
        let got = critical_set(&v, &x, 1, 0).unwrap();
        assert!(common::dist(&got.best.y, &want) < 1e-10);
    }
}

#[test]
fn matrix_truncations() {
    let v = VarietySpec::matrix_rank(3, 3, 1).unwrap();
    let rep = critical_set(&v, &diag(&[3.0, 2.0, 1.0]), 1, 0).unwrap();
    let d: Vec<f64> = rep.points.iter().map(|p| p.distance).collect();
    let want = [5f64.sqrt(), 10f64.sqrt(), 13f64.sqrt()];
    assert_eq!(d.len(), 3);
    for (a, b) in d.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{d:?}");
    }
    assert!(common::dist(&rep.best.y, &diag(&[3.0, 0.0, 0.0])) < 1e-12);
    assert!(rep.all_points().all(|p| p.residual <= 1e-8));
    assert!(rep.points.windows(2).all(|w| w[0].distance <= w[1].distance));
}

#[test]
fn matrix_census_matches_svd_oracle() {
    for trial in 0..10 {
        let mut r = rng::seeded(rng::trial_seed(33, trial));
        let x = rng::gaussian_vec(&mut r, 12);
        let sv = common::singular_values(3, 4, &x);
        for k in 1..=2 {
            let rep = critical_set(&VarietySpec::matrix_rank(3, 4, k).unwrap(), &x, 1, 0).unwrap();
            assert_eq!(rep.points.len(), common::binom(3, k));
            assert!((rep.best_distance() - common::eckart_young(&sv, k)).abs() < 1e-9);
        }
    }
}

#[test]
fn cone_nearest_points() {
    let v = VarietySpec::quadric_cone(&[1.0, -1.0]).unwrap();
    let rep = critical_set(&v, &[1.0, 0.0], 1, 0).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((rep.best_distance() - h).abs() < 1e-12);
    let near: Vec<&Vec<f64>> = rep.all_points().filter(|p| (p.distance - h).abs() < 1e-12).map(|p| &p.y).collect();
    assert_eq!(near.len(), 2);
    for want in [[0.5, 0.5], [0.5, -0.5]] {
        assert!(near.iter().any(|y| common::dist(y, &want) < 1e-12));
    }
}

#[test]
fn rank_one_diagonal_tensor() {
    let v = VarietySpec::tensor_rank_one(&[2, 2, 2]).unwrap();
    let x = DenseTensor::diagonal(3, &[3.0, 2.0]).into_data();
    let rep = critical_set(&v, &x, 200, 1).unwrap();
    let sigma = 1.0 / (1.0 / 9.0 + 1.0 / 4.0f64).sqrt();
    for want in [2.0, 3.0, (13.0 - sigma * sigma).sqrt()] {
        assert!(rep.points.iter().any(|p| (p.distance - want).abs() < 1e-8), "missing {want}: {:?}", rep.points);
    }
    assert!((rep.best_distance() - 2.0).abs() < 1e-10);
    assert!(rep.all_points().all(|p| p.residual <= 1e-8));
}

#[test]
fn transversality_examples() {
    assert!(quadric_transversality(&[1.0, 2.0, 3.0]).unwrap());
    assert!(!quadric_transversality(&[1.0, 1.0, 2.0]).unwrap());
    assert!(quadric_transversality(&[5.0]).unwrap());
    assert!(quadric_transversality(&[1.0, 0.0]).is_err());
}

#[test]
fn lipschitz_examples() {
    let rep = lipschitz_probe(&span_e1(), 50, 1).unwrap();
    assert!(rep.max_ratio <= 1.0 + 1e-12);
    assert_eq!(pair_ratio(&span_e1(), &[1.0, 2.0], &[1.0, 2.0], 0).unwrap(), 0.0);
}

#[test]
fn uniqueness_for_matrices() {
    let rep = uniqueness_probe(&VarietySpec::matrix_rank(2, 2, 1).unwrap(), 500, 5).unwrap();
    assert!(rep.fraction_unique >= 0.99, "{}", rep.fraction_unique);
}

#[test]
fn stratum_tree_shapes() {
    let t = StratumTree::for_variety(&VarietySpec::matrix_rank(3, 3, 2).unwrap());
    assert_eq!(t.strata.len(), 3);
    assert_eq!(t.strata[0].parent, None);
    assert_eq!(t.strata[1].parent, Some(0));
    assert_eq!(t.strata[2].closure, None);
    assert_eq!(StratumTree::for_variety(&span_e1()).strata.len(), 1);
}

#[test]
fn orbit_closure() {
    let v = VarietySpec::tensor_rank_one(&[2, 2, 2]).unwrap();
    let mut checked_deletion = false;
    for seed in 0..10 {
        let g = DenseTensor::new(vec![2, 2, 2], rng::gaussian_vec(&mut rng::seeded(seed), 8)).unwrap();
        let x = symmetrize(&g).unwrap().densify();
        let rep = critical_set(&v, x.data(), 200, seed).unwrap();
        assert!(orbit_closure_check(&v, &x, &rep));
        let asym = rep.points.iter().position(|p| !DenseTensor::new(vec![2, 2, 2], p.y.clone()).unwrap().is_symmetric(1e-8));
        if let Some(i) = asym {
            let mut cut = rep.clone();
            cut.points.remove(i);
            assert!(!orbit_closure_check(&v, &x, &cut));
            checked_deletion = true;
        }
    }
    assert!(checked_deletion, "no query produced a non-symmetric critical point");
    assert!(!orbit_closure_check(&VarietySpec::matrix_rank(2, 2, 1).unwrap(), &DenseTensor::zeros(&[2, 2]), &critical_set(&span_e1(), &[1.0, 1.0], 1, 0).unwrap()));
}

#[test]
fn zero_query_for_cone_lies_on_variety() {
    let v = VarietySpec::quadric_cone(&[1.0, -2.0]).unwrap();
    let rep = critical_set(&v, &[0.0, 0.0], 10, 0).unwrap();
    assert_eq!(rep.best_distance(), 0.0);
    let _ = variety::constraint_residual(&v, &rep.best.y).unwrap();
}

#[test]
fn rank_two_query_is_its_own_critical_point() {
    // positive hyperdeterminant: real rank 2, so the query lies on the variety
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 9.0];
    let v = VarietySpec::tensor_rank(&[2, 2, 2], 2).unwrap();
    let rep = critical_set(&v, &x, 20, 0).unwrap();
    assert!(rep.best_distance() < 1e-10, "{}", rep.best_distance());
}
