//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Thin singular value decomposition `m = u diag(s) v^T` with `s` in
/// descending order. `u` is `rows x r`, `v` is `cols x r`, `r = min(rows, cols)`.
/// Columns of `u` belonging to zero singular values are left zero.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi SVD. Slower than bidiagonalization but accurate to
/// working precision in every singular triplet, including rank-deficient input.
pub fn thin_svd(m: &DMatrix<f64>) -> ThinSvd {
    if m.nrows() < m.ncols() {
        let t = thin_svd(&m.transpose());
        return ThinSvd { u: t.v, s: t.s, v: t.u };
    }
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut w = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for r in 0..rows {
                    let (a, b) = (w[(r, i)], w[(r, j)]);
                    w[(r, i)] = c * a - sn * b;
                    w[(r, j)] = sn * a + c * b;
                }
                for r in 0..cols {
                    let (a, b) = (v[(r, i)], v[(r, j)]);
                    v[(r, i)] = c * a - sn * b;
                    v[(r, j)] = sn * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = DMatrix::from_fn(rows, cols, |r, c| {
        let j = order[c];
        if norms[j] > 0.0 { w[(r, j)] / norms[j] } else { 0.0 }
    });
    let v = DMatrix::from_fn(cols, cols, |r, c| v[(r, order[c])]);
    ThinSvd { u, s, v }
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    thin_svd(m).s
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > rel_tol * top).count(),
        _ => 0,
    }
}

/// Orthonormal basis of the column space, as the columns of the result.
/// Directions with singular value below `rel_tol * sigma_max` are dropped.
pub fn column_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = thin_svd(m);
    let top = svd.s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let keep = svd.s.iter().filter(|&&s| s > rel_tol * top).count();
    svd.u.columns(0, keep).into_owned()
}

/// Orthogonal projection of `v` onto the span of the orthonormal columns of `q`.
pub fn project(q: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let v = DVector::from_column_slice(v);
    let coeffs = q.transpose() * v;
    (q * coeffs).iter().copied().collect()
}

/// Least-squares solution of `a x = b` through the pseudo-inverse, with
/// singular values below `rel_tol * sigma_max` truncated.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (rel_tol * top).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("u and v computed")
}

/// Row-major `rows x cols` matrix from a flat slice.
pub fn matrix_row_major(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// Flatten a matrix row-major.
pub fn flatten_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// Random orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn random_orthogonal(rng: &mut crate::rng::Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| crate::rng::gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        if r[(c, c)] < 0.0 {
            for i in 0..n {
                q[(i, c)] = -q[(i, c)];
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binom(4, 2), 6);
        assert_eq!(binom(3, 0), 1);
        assert_eq!(binom(2, 3), 0);
        assert_eq!(binom(10, 3), 120);
    }

    #[test]
    fn rank_and_basis() {
        let m = matrix_row_major(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]);
        assert_eq!(numerical_rank(&m, 1e-10), 2);
        let q = column_basis(&m, 1e-10);
        assert_eq!(q.ncols(), 2);
        let p = project(&q, &[1.0, 2.0, 0.0]);
        assert!(dist(&p, &[1.0, 2.0, 0.0]) < 1e-12);
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let q = random_orthogonal(&mut crate::rng::seeded(3), 4);
        let e = q.transpose() * &q - DMatrix::identity(4, 4);
        assert!(e.norm() < 1e-12);
    }
}
