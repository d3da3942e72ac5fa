//! Critical points on the diagonal quadric cone `sum a_i y_i^2 = 0`.
//!
//! Lagrange conditions give `y_i = x_i / (1 + lambda a_i)`, and the
//! constraint becomes the univariate equation
//! `f(lambda) = sum a_i x_i^2 / (1 + lambda a_i)^2 = 0`. Its real roots are
//! bracketed on each interval between consecutive poles `-1/a_i`.
//! Coordinates with `x_i = 0` add the branch `lambda = -1/a_i` where `y_i`
//! is free and fixed by the constraint instead.

use crate::linalg;

const SAMPLES_PER_INTERVAL: usize = 4000;

struct Secular<'a> {
    a: &'a [f64],
    x: &'a [f64],
    active: Vec<usize>,
}

impl Secular<'_> {
    fn f(&self, l: f64) -> f64 {
        self.active.iter().map(|&i| self.a[i] * self.x[i].powi(2) / (1.0 + l * self.a[i]).powi(2)).sum()
    }

    fn df(&self, l: f64) -> f64 {
        self.active
            .iter()
            .map(|&i| -2.0 * self.a[i].powi(2) * self.x[i].powi(2) / (1.0 + l * self.a[i]).powi(3))
            .sum()
    }

    /// Sum of absolute values of the terms of `f`, the natural scale for
    /// deciding whether `f` vanishes.
    fn magnitude(&self, l: f64) -> f64 {
        self.active.iter().map(|&i| (self.a[i] * self.x[i].powi(2) / (1.0 + l * self.a[i]).powi(2)).abs()).sum()
    }
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn polish(s: &Secular, mut l: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..8 {
        let d = s.df(l);
        if d == 0.0 {
            break;
        }
        let next = l - s.f(l) / d;
        if !(next > lo && next < hi) || s.f(next).abs() >= s.f(l).abs() {
            break;
        }
        l = next;
    }
    l
}

/// Sample points strictly inside `(lo, hi)`, clustered toward finite ends.
fn samples(lo: Option<f64>, hi: Option<f64>, width: f64) -> Vec<f64> {
    let n = SAMPLES_PER_INTERVAL;
    (1..n)
        .map(|i| {
            let s = i as f64 / n as f64;
            match (lo, hi) {
                (Some(a), Some(b)) => a + (b - a) * (1.0 - (std::f64::consts::PI * s).cos()) / 2.0,
                (None, Some(b)) => b - width * (1.0 - s) / s,
                (Some(a), None) => a + width * s / (1.0 - s),
                (None, None) => width * (2.0 * s - 1.0) / (s * (1.0 - s)),
            }
        })
        .collect()
}

/// All real roots of the secular equation for query `x`, ascending.
pub fn quadric_multipliers(a: &[f64], x: &[f64]) -> Vec<f64> {
    let xn = linalg::norm(x);
    let active: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() > 1e-14 * xn).collect();
    if active.is_empty() {
        return Vec::new();
    }
    let s = Secular { a, x, active };
    let mut poles: Vec<f64> = s.active.iter().map(|&i| -1.0 / a[i]).collect();
    poles.sort_by(f64::total_cmp);
    poles.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * q.abs().max(1.0));
    let width = 1.0 / s.active.iter().map(|&i| a[i].abs()).fold(f64::INFINITY, f64::min);

    let mut bounds: Vec<Option<f64>> = vec![None];
    bounds.extend(poles.iter().map(|&p| Some(p)));
    bounds.push(None);

    let mut roots = Vec::new();
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let lo_v = lo.unwrap_or(f64::NEG_INFINITY);
        let hi_v = hi.unwrap_or(f64::INFINITY);
        let pts = samples(lo, hi, width);
        for pair in pts.windows(2) {
            let (l0, l1) = (pair[0], pair[1]);
            let (f0, f1) = (s.f(l0), s.f(l1));
            if f0 == 0.0 {
                roots.push(l0);
            } else if (f0 > 0.0) != (f1 > 0.0) && f1 != 0.0 {
                let r = bisect(|l| s.f(l), l0, l1);
                roots.push(polish(&s, r, lo_v, hi_v));
            }
            // tangential roots: an extremum of f touching zero
            let (d0, d1) = (s.df(l0), s.df(l1));
            if (d0 > 0.0) != (d1 > 0.0) {
                let e = bisect(|l| s.df(l), l0, l1);
                if s.f(e).abs() <= 1e-12 * s.magnitude(e) {
                    roots.push(e);
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|p, q| (*p - *q).abs() <= 1e-10 * q.abs().max(1.0));
    roots
}

/// Candidate critical points (before filtering) for the cone with
/// coefficients `a` and query `x`.
pub(super) fn candidates(a: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = quadric_multipliers(a, x)
        .into_iter()
        .map(|l| x.iter().zip(a).map(|(xi, ai)| xi / (1.0 + l * ai)).collect())
        .collect();

    // Branch lambda = -1/alpha for coefficient values alpha carried only by
    // zero coordinates of x.
    let xn = linalg::norm(x);
    let zero = |i: usize| x[i].abs() <= 1e-14 * xn;
    let mut alphas: Vec<f64> = (0..a.len()).filter(|&i| zero(i)).map(|i| a[i]).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    for alpha in alphas {
        if (0..a.len()).any(|i| !zero(i) && a[i] == alpha) {
            continue;
        }
        let l = -1.0 / alpha;
        let free: Vec<usize> = (0..a.len()).filter(|&i| zero(i) && a[i] == alpha).collect();
        let mut y: Vec<f64> = (0..a.len())
            .map(|i| if zero(i) { 0.0 } else { x[i] / (1.0 + l * a[i]) })
            .collect();
        let rest: f64 = y.iter().zip(a).map(|(yi, ai)| ai * yi * yi).sum();
        let sq = -rest / alpha;
        if sq <= 0.0 {
            continue;
        }
        // with several free coordinates the critical set is a sphere; report
        // its intersections with the coordinate axes
        for &i in &free {
            for sign in [1.0, -1.0] {
                y[i] = sign * sq.sqrt();
                out.push(y.clone());
            }
            y[i] = 0.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use nalgebra::DMatrix;

    /// Independent route: clear denominators to get a polynomial in lambda
    /// and take the real eigenvalues of its companion matrix.
    fn polynomial_roots(a: &[f64], x: &[f64]) -> Vec<f64> {
        fn mul(p: &[f64], q: &[f64]) -> Vec<f64> {
            let mut r = vec![0.0; p.len() + q.len() - 1];
            for (i, a) in p.iter().enumerate() {
                for (j, b) in q.iter().enumerate() {
                    r[i + j] += a * b;
                }
            }
            r
        }
        let n = a.len();
        let mut poly = vec![0.0];
        for i in 0..n {
            let mut term = vec![a[i] * x[i] * x[i]];
            for j in 0..n {
                if j != i {
                    term = mul(&term, &mul(&[1.0, a[j]], &[1.0, a[j]]));
                }
            }
            if poly.len() < term.len() {
                poly.resize(term.len(), 0.0);
            }
            for (k, c) in term.iter().enumerate() {
                poly[k] += c;
            }
        }
        while poly.len() > 1 && poly.last().unwrap().abs() < 1e-300 {
            poly.pop();
        }
        let deg = poly.len() - 1;
        let lead = poly[deg];
        let comp = DMatrix::from_fn(deg, deg, |r, c| {
            if r == 0 {
                -poly[deg - 1 - c] / lead
            } else if c + 1 == r {
                1.0
            } else {
                0.0
            }
        });
        let mut roots: Vec<f64> = comp
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() < 1e-7 * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .collect();
        roots.sort_by(f64::total_cmp);
        roots
    }

    #[test]
    fn lines_through_origin() {
        // a = (1,-1): the cone is the pair of lines y2 = +-y1; x = (1, 0.5)
        let r = quadric_multipliers(&[1.0, -1.0], &[1.0, 0.5]);
        let ys: Vec<Vec<f64>> = r.iter().map(|l| vec![1.0 / (1.0 + l), 0.5 / (1.0 - l)]).collect();
        assert_eq!(ys.len(), 2);
        for y in &ys {
            assert!((y[0].abs() - y[1].abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coordinate_branch() {
        let c = candidates(&[1.0, -1.0], &[1.0, 0.0]);
        assert_eq!(c.len(), 2);
        for y in &c {
            assert!((y[0] - 0.5).abs() < 1e-15 && (y[1].abs() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn bracketing_agrees_with_companion_roots() {
        let mut r = rng::seeded(21);
        for trial in 0..40 {
            let n = 2 + trial % 4;
            let mut a = rng::gaussian_vec(&mut r, n);
            a[0] = a[0].abs() + 0.1;
            a[1] = -(a[1].abs() + 0.1);
            let x = rng::gaussian_vec(&mut r, n);
            let got = quadric_multipliers(&a, &x);
            let want = polynomial_roots(&a, &x);
            assert_eq!(got.len(), want.len(), "trial {trial}: {got:?} vs {want:?}");
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-6 * (1.0 + w.abs()), "{g} vs {w}");
            }
        }
    }
}
