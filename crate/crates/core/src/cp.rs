//! Parameterization of sums of `k` rank-one tensors by their factor
//! vectors, with exact first and second derivatives of
//! `f(theta) = 1/2 ||phi(theta) - x||^2`.
//!
//! Parameters are laid out term by term: term `j` occupies a contiguous
//! block holding its mode-1 factor, then its mode-2 factor, and so on.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::tensor::{increment, DenseTensor, RankOneTerm};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpLayout {
    pub shape: Vec<usize>,
    pub k: usize,
}

impl CpLayout {
    pub fn new(shape: &[usize], k: usize) -> Self {
        CpLayout { shape: shape.to_vec(), k }
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn ambient(&self) -> usize {
        self.shape.iter().product()
    }

    fn term_len(&self) -> usize {
        self.shape.iter().sum()
    }

    pub fn nparams(&self) -> usize {
        self.k * self.term_len()
    }

    pub fn offset(&self, term: usize, mode: usize) -> usize {
        term * self.term_len() + self.shape[..mode].iter().sum::<usize>()
    }

    pub fn factor<'a>(&self, theta: &'a [f64], term: usize, mode: usize) -> &'a [f64] {
        let o = self.offset(term, mode);
        &theta[o..o + self.shape[mode]]
    }

    /// Dimension of the image of the parameterization at a generic point,
    /// capped by the ambient dimension. Exact for `k = 1` and for
    /// non-defective tensor formats with `d >= 3`; matrices have extra
    /// `GL(k)` freedom and are handled in closed form elsewhere.
    pub fn expected_dim(&self) -> usize {
        let per_term = self.shape.iter().map(|m| m - 1).sum::<usize>() + 1;
        (self.k * per_term).min(self.ambient())
    }

    pub fn eval(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient()];
        let mut idx = vec![0; self.order()];
        for v in out.iter_mut() {
            let mut acc = 0.0;
            for j in 0..self.k {
                let mut p = 1.0;
                for (i, &a) in idx.iter().enumerate() {
                    p *= theta[self.offset(j, i) + a];
                }
                acc += p;
            }
            *v = acc;
            increment(&mut idx, &self.shape);
        }
        out
    }

    /// `n x P` Jacobian of the parameterization.
    pub fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.ambient();
        let d = self.order();
        let mut jac = DMatrix::zeros(n, self.nparams());
        let mut idx = vec![0; d];
        for r in 0..n {
            for j in 0..self.k {
                for i in 0..d {
                    let mut p = 1.0;
                    for (l, &a) in idx.iter().enumerate() {
                        if l != i {
                            p *= theta[self.offset(j, l) + a];
                        }
                    }
                    jac[(r, self.offset(j, i) + idx[i])] = p;
                }
            }
            increment(&mut idx, &self.shape);
        }
        jac
    }

    /// Gradient `J^T (phi - x)`.
    pub fn gradient(&self, theta: &[f64], x: &[f64]) -> DVector<f64> {
        let res = DVector::from_vec(linalg::sub(&self.eval(theta), x));
        self.jacobian(theta).transpose() * res
    }

    /// Exact Hessian of `1/2 ||phi - x||^2`.
    pub fn hessian(&self, theta: &[f64], x: &[f64]) -> DMatrix<f64> {
        let jac = self.jacobian(theta);
        let mut h = jac.transpose() * &jac;
        let res = linalg::sub(&self.eval(theta), x);
        let d = self.order();
        let mut idx = vec![0; d];
        for &rv in &res {
            if rv != 0.0 {
                for j in 0..self.k {
                    for i in 0..d {
                        for l in (i + 1)..d {
                            let mut p = rv;
                            for (o, &a) in idx.iter().enumerate() {
                                if o != i && o != l {
                                    p *= theta[self.offset(j, o) + a];
                                }
                            }
                            let r = self.offset(j, i) + idx[i];
                            let c = self.offset(j, l) + idx[l];
                            h[(r, c)] += p;
                            h[(c, r)] += p;
                        }
                    }
                }
            }
            increment(&mut idx, &self.shape);
        }
        h
    }

    /// Rescale each term so that the factors of modes `2..d` have unit
    /// norm. Returns `false` if some factor vanished.
    pub fn normalize_gauge(&self, theta: &mut [f64]) -> bool {
        for j in 0..self.k {
            let mut carry = 1.0;
            for i in 1..self.order() {
                let o = self.offset(j, i);
                let f = &mut theta[o..o + self.shape[i]];
                let n = linalg::norm(f);
                if !(n > 1e-300) || !n.is_finite() {
                    return false;
                }
                f.iter_mut().for_each(|v| *v /= n);
                carry *= n;
            }
            let o = self.offset(j, 0);
            theta[o..o + self.shape[0]].iter_mut().for_each(|v| *v *= carry);
        }
        true
    }

    /// Orthonormal basis of the tangent space `range J(theta)`.
    pub fn tangent_basis(&self, theta: &[f64]) -> DMatrix<f64> {
        linalg::column_basis(&self.jacobian(theta), TANGENT_RANK_TOL)
    }

    pub fn to_terms(&self, theta: &[f64]) -> Vec<RankOneTerm> {
        (0..self.k)
            .filter_map(|j| {
                let factors = (0..self.order()).map(|i| self.factor(theta, j, i).to_vec()).collect();
                RankOneTerm::new(1.0, factors).ok()
            })
            .collect()
    }

    pub fn from_terms(&self, terms: &[RankOneTerm]) -> Vec<f64> {
        let mut theta = vec![0.0; self.nparams()];
        for (j, t) in terms.iter().enumerate().take(self.k) {
            for (i, f) in t.factors.iter().enumerate() {
                let o = self.offset(j, i);
                let s = if i == 0 { t.weight } else { 1.0 };
                for (a, v) in f.iter().enumerate() {
                    theta[o + a] = s * v;
                }
            }
        }
        theta
    }
}

/// Truncated-HOSVD starting point: column `j` of mode `i` is the
/// `(j mod m_i)`-th left singular vector of the mode-`i` unfolding, and the
/// mode-1 factor carries the weight `t(a_1j, ..., a_dj)`.
pub fn hosvd_params(t: &DenseTensor, k: usize) -> Vec<f64> {
    let layout = CpLayout::new(t.shape(), k);
    let mut theta = vec![0.0; layout.nparams()];
    let bases: Vec<DMatrix<f64>> = (0..t.order())
        .map(|i| {
            let svd = t.unfolding(i).svd(true, false);
            svd.u.expect("u requested")
        })
        .collect();
    for j in 0..k {
        let cols: Vec<Vec<f64>> = bases
            .iter()
            .map(|u| {
                let c = j % u.ncols();
                u.column(c).iter().copied().collect()
            })
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let mut w = t.contract_all(&refs);
        if w.abs() < 1e-3 * t.norm() / k as f64 {
            w = 1e-3 * t.norm().max(1e-300) / k as f64;
        }
        for (i, c) in cols.iter().enumerate() {
            let o = layout.offset(j, i);
            let s = if i == 0 { w } else { 1.0 };
            for (a, v) in c.iter().enumerate() {
                theta[o + a] = s * v;
            }
        }
    }
    theta
}

/// Relative singular-value cutoff used to decide the rank of a tangent
/// Jacobian.
pub const TANGENT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop once `||grad f|| <= grad_tol * (1 + ||x||^2)`.
    pub grad_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iter: 200, grad_tol: 1e-15 }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub theta: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Levenberg-Marquardt on the stationarity system `grad f(theta) = 0`,
/// using the exact Hessian as its Jacobian. Converges to saddles as well
/// as minima of `f`. Returns `None` when a factor collapses or the iterate
/// stops being finite.
pub fn solve_stationary(layout: &CpLayout, x: &[f64], theta0: &[f64], opts: LmOptions) -> Option<LmOutcome> {
    let mut theta = theta0.to_vec();
    if !layout.normalize_gauge(&mut theta) {
        return None;
    }
    let scale = 1.0 + linalg::norm(x).powi(2);
    let mut g = layout.gradient(&theta, x);
    let mut gn = g.norm();
    let mut mu = 1e-3 * (1.0 + gn);
    let p = layout.nparams();
    let mut iterations = 0;
    let mut stalls = 0;
    while iterations < opts.max_iter && gn > opts.grad_tol * scale {
        iterations += 1;
        let h = layout.hessian(&theta, x);
        let hth = h.transpose() * &h;
        let rhs = -(h.transpose() * &g);
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = hth.clone();
            for i in 0..p {
                a[(i, i)] += mu;
            }
            let step = match a.cholesky() {
                Some(c) => c.solve(&rhs),
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let mut cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            if !cand.iter().all(|v| v.is_finite()) || !layout.normalize_gauge(&mut cand) {
                mu *= 10.0;
                continue;
            }
            let gc = layout.gradient(&cand, x);
            let gcn = gc.norm();
            if gcn < gn {
                stalls = if gcn > 0.999 * gn { stalls + 1 } else { 0 };
                theta = cand;
                g = gc;
                gn = gcn;
                mu = (mu / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted || stalls > 20 {
            break;
        }
    }
    if !theta.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(LmOutcome { theta, grad_norm: gn, iterations })
}

/// Levenberg-Marquardt on the least-squares problem `min ||phi(theta) - x||`
/// with Marquardt scaling. Every accepted step lowers the residual, so the
/// returned objective never exceeds the starting one.
pub fn fit_least_squares(layout: &CpLayout, x: &[f64], theta0: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let mut theta = theta0.to_vec();
    let mut res = linalg::sub(&layout.eval(&theta), x);
    let mut obj = linalg::norm(&res);
    let mut mu = 1e-3;
    let p = layout.nparams();
    let floor = 1e-15 * (1.0 + linalg::norm(x));
    for _ in 0..max_iter {
        if obj <= floor {
            break;
        }
        let j = layout.jacobian(&theta);
        let jtj = j.transpose() * &j;
        let rhs = -(j.transpose() * DVector::from_column_slice(&res));
        if rhs.norm() <= 1e-15 * (1.0 + obj) {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..p {
                a[(i, i)] += mu * (1.0 + jtj[(i, i)]);
            }
            let step = match a.cholesky() {
                Some(c) => c.solve(&rhs),
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let cres = linalg::sub(&layout.eval(&cand), x);
            let cobj = linalg::norm(&cres);
            if cobj.is_finite() && cobj < obj {
                accepted = obj - cobj > 1e-12 * obj;
                theta = cand;
                res = cres;
                obj = cobj;
                mu = (mu / 5.0).max(1e-15);
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    (theta, obj)
}

/// `||P_T (x - phi(theta))||` with `T` the tangent space at `theta`.
pub fn tangent_residual(layout: &CpLayout, theta: &[f64], x: &[f64]) -> f64 {
    let q = layout.tangent_basis(theta);
    let r = linalg::sub(x, &layout.eval(theta));
    linalg::norm(&linalg::project(&q, &r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn fd_gradient(layout: &CpLayout, theta: &[f64], x: &[f64]) -> Vec<f64> {
        let f = |t: &[f64]| 0.5 * linalg::dist(&layout.eval(t), x).powi(2);
        let h = 1e-6;
        (0..theta.len())
            .map(|p| {
                let mut a = theta.to_vec();
                let mut b = theta.to_vec();
                a[p] += h;
                b[p] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let layout = CpLayout::new(&[2, 3, 2], 2);
        let mut r = rng::seeded(5);
        let theta = rng::gaussian_vec(&mut r, layout.nparams());
        let x = rng::gaussian_vec(&mut r, layout.ambient());
        let g = layout.gradient(&theta, &x);
        let fd = fd_gradient(&layout, &theta, &x);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        let h = layout.hessian(&theta, &x);
        let step = 1e-6;
        for p in 0..layout.nparams() {
            let mut a = theta.clone();
            let mut b = theta.clone();
            a[p] += step;
            b[p] -= step;
            let col = (layout.gradient(&a, &x) - layout.gradient(&b, &x)) / (2.0 * step);
            for q in 0..layout.nparams() {
                assert!((h[(q, p)] - col[q]).abs() < 1e-6, "H[{q},{p}]");
            }
        }
    }

    #[test]
    fn eval_matches_terms() {
        let layout = CpLayout::new(&[2, 2], 1);
        let theta = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(layout.eval(&theta), vec![3.0, 4.0, 6.0, 8.0]);
        let terms = layout.to_terms(&theta);
        let back = layout.from_terms(&terms);
        assert!(linalg::dist(&layout.eval(&back), &layout.eval(&theta)) < 1e-12);
    }

    #[test]
    fn lm_finds_singular_tuple_of_matrix() {
        // critical points of rank-one approximation of a matrix are its
        // singular triples
        let layout = CpLayout::new(&[2, 2], 1);
        let x = vec![3.0, 0.0, 0.0, 2.0];
        let out = solve_stationary(&layout, &x, &[0.3, 1.0, 0.2, 1.0], LmOptions::default()).unwrap();
        let y = layout.eval(&out.theta);
        assert!(tangent_residual(&layout, &out.theta, &x) < 1e-10);
        let is_a = linalg::dist(&y, &[3.0, 0.0, 0.0, 0.0]) < 1e-8;
        let is_b = linalg::dist(&y, &[0.0, 0.0, 0.0, 2.0]) < 1e-8;
        assert!(is_a || is_b, "{y:?}");
    }

    #[test]
    fn hosvd_recovers_rank_one() {
        let t = RankOneTerm::new(-2.5, vec![vec![1.0, 2.0], vec![0.0, 1.0, -1.0], vec![3.0, 1.0]]).unwrap().dense();
        let layout = CpLayout::new(t.shape(), 1);
        let theta = hosvd_params(&t, 1);
        assert!(linalg::dist(&layout.eval(&theta), t.data()) < 1e-12);
    }

    #[test]
    fn expected_dims() {
        assert_eq!(CpLayout::new(&[2, 2, 2], 1).expected_dim(), 4);
        assert_eq!(CpLayout::new(&[2, 2, 2], 2).expected_dim(), 8);
        assert_eq!(CpLayout::new(&[3, 3, 3], 2).expected_dim(), 14);
    }
}
