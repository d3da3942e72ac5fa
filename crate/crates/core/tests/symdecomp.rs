use edcrit::rng;
use edcrit::symdecomp::{
    default_nodes, format_q, mixed_power, parse_q, power_basis, q, q_frac, sym_dim, vandermonde_decompose, QSymTensor,
    SymCombination, Q,
};
use edcrit::tensor::sorted_indices;
use num::{One, Zero};

fn e(i: usize, n: usize) -> Vec<Q> {
    (0..n).map(|j| if i == j { q(1) } else { q(0) }).collect()
}

fn random_q(r: &mut rng::Rng) -> Q {
    q_frac((rng::gaussian(r) * 7.0).round() as i64, 1 + (rng::gaussian(r).abs() * 4.0) as i64)
}

/// Entry of `v^{(x) d}` at every sorted multi-index, computed directly.
fn power_coords(v: &[Q], d: usize) -> Vec<Q> {
    sorted_indices(v.len(), d).iter().map(|idx| idx.iter().fold(Q::one(), |acc, &i| acc * &v[i])).collect()
}

/// Laplace expansion along the first row.
fn cofactor_det(a: &[Vec<Q>]) -> Q {
    if a.len() == 1 {
        return a[0][0].clone();
    }
    let mut acc = Q::zero();
    for j in 0..a.len() {
        if a[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Q>> =
            a[1..].iter().map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, x)| x.clone()).collect()).collect();
        let term = &a[0][j] * cofactor_det(&minor);
        acc = if j % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

#[test]
fn mixed_power_examples() {
    let s = mixed_power(&e(0, 2), &e(1, 2), 1, 2).unwrap();
    assert_eq!(s.coeffs(), &[q(0), q(1), q(0)]);
    let s = mixed_power(&e(0, 2), &e(1, 2), 1, 3).unwrap();
    assert_eq!(s.coeffs(), &[q(0), q(0), q(1), q(0)]);
    let u = vec![q_frac(1, 2), q(-3)];
    assert_eq!(mixed_power(&u, &e(1, 2), 4, 4).unwrap(), QSymTensor::power(&q(1), &u, 4));
    assert!(mixed_power(&u, &e(1, 2), 5, 4).is_err());
}

#[test]
fn mixed_powers_are_binomial_coefficients() {
    let mut r = rng::seeded(61);
    for d in 1..=5 {
        let u: Vec<Q> = (0..3).map(|_| random_q(&mut r)).collect();
        let v: Vec<Q> = (0..3).map(|_| random_q(&mut r)).collect();
        for _ in 0..5 {
            let t = random_q(&mut r);
            let tuv: Vec<Q> = u.iter().zip(&v).map(|(a, b)| &t * a + b).collect();
            let mut acc = vec![Q::zero(); sorted_indices(3, d).len()];
            let mut tk = Q::one();
            for k in 0..=d {
                let s = mixed_power(&u, &v, k, d).unwrap();
                for (a, c) in acc.iter_mut().zip(s.coeffs()) {
                    *a += &tk * c;
                }
                tk *= &t;
            }
            assert_eq!(acc, power_coords(&tuv, d), "d={d}");
        }
    }
}

#[test]
fn vandermonde_examples() {
    let u = vec![q(2), q(-1)];
    let v = vec![q_frac(1, 3), q(5)];
    let c = vandermonde_decompose(&u, &v, 1, 2, &[q(0), q(1)]).unwrap();
    let sum: Vec<Q> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
    let want = SymCombination { d: 2, terms: vec![(q(-1), v.clone()), (q(1), sum), (q(-1), u.clone())] };
    assert_eq!(c.densify(), want.densify());
    assert_eq!(c.densify(), mixed_power(&u, &v, 1, 2).unwrap());

    let c = vandermonde_decompose(&u, &v, 0, 2, &[q(0), q(1)]).unwrap();
    assert_eq!(c.terms, vec![(q(1), v.clone())]);

    let c = vandermonde_decompose(&e(0, 2), &e(1, 2), 2, 3, &[q(0), q(1), q(-1)]).unwrap();
    assert_eq!(c.densify(), mixed_power(&e(0, 2), &e(1, 2), 2, 3).unwrap());

    assert!(vandermonde_decompose(&u, &v, 1, 2, &[q(1), q(1)]).is_err());
    assert!(vandermonde_decompose(&u, &v, 1, 3, &[q(0), q(1)]).is_err());
}

#[test]
fn vandermonde_on_default_nodes() {
    let mut r = rng::seeded(62);
    for d in 1..=6 {
        let u: Vec<Q> = (0..2).map(|_| random_q(&mut r)).collect();
        let v: Vec<Q> = (0..2).map(|_| random_q(&mut r)).collect();
        for k in 0..=d {
            let c = vandermonde_decompose(&u, &v, k, d, &default_nodes(d)).unwrap();
            assert_eq!(c.densify(), mixed_power(&u, &v, k, d).unwrap());
        }
    }
}

#[test]
fn power_basis_is_invertible() {
    for (m, d) in [(2, 2), (2, 3), (2, 4), (3, 2)] {
        let b = power_basis(m, d).unwrap();
        assert_eq!(b.vectors.len() as u64, sym_dim(m, d));
        let rows: Vec<Vec<Q>> =
            b.vectors.iter().map(|v| power_coords(&v.iter().map(|&x| q(x)).collect::<Vec<_>>(), d)).collect();
        let det = cofactor_det(&rows);
        assert!(!det.is_zero(), "({m},{d})");
        assert_eq!(det.clone() * det.clone(), b.determinant.clone() * b.determinant.clone(), "({m},{d})");
    }
    let b = power_basis(3, 3).unwrap();
    assert_eq!(b.vectors.len(), 10);
    assert!(!b.determinant.is_zero());
}

#[test]
fn sym_dim_examples() {
    assert_eq!(sym_dim(2, 2), 3);
    assert_eq!(sym_dim(5, 1), 5);
    assert_eq!(sym_dim(3, 4), 15);
}

#[test]
fn rationals_serialize_as_fractions() {
    assert_eq!(format_q(&q_frac(-6, 4)), "-3/2");
    assert_eq!(format_q(&q(2)), "2/1");
    assert_eq!(parse_q("-3/2").unwrap(), q_frac(-3, 2));
    assert_eq!(parse_q("7").unwrap(), q(7));
    assert!(parse_q("1/0").is_err());

    let c = vandermonde_decompose(&e(0, 2), &e(1, 2), 1, 2, &[q(0), q(1)]).unwrap();
    let json = serde_json::to_string(&c).unwrap();
    assert!(json.contains("\"-1/1\""), "{json}");
    assert_eq!(serde_json::from_str::<SymCombination>(&json).unwrap(), c);
}
