//! Reference computations written without the library's linear algebra,
//! used as independent oracles.
#![allow(dead_code)]

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Orthogonal projection of `x` onto the span of `cols` via the normal
/// equations.
pub fn project(cols: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let r = cols.len();
    let g: Vec<Vec<f64>> = (0..r).map(|i| (0..r).map(|j| dot(&cols[i], &cols[j])).collect()).collect();
    let rhs: Vec<f64> = cols.iter().map(|c| dot(c, x)).collect();
    let c = solve(g, rhs);
    (0..x.len()).map(|i| (0..r).map(|j| c[j] * cols[j][i]).sum()).collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Singular values (descending) of a row-major `rows x cols` matrix.
pub fn singular_values(rows: usize, cols: usize, a: &[f64]) -> Vec<f64> {
    let ata: Vec<Vec<f64>> =
        (0..cols).map(|i| (0..cols).map(|j| (0..rows).map(|r| a[r * cols + i] * a[r * cols + j]).sum()).collect()).collect();
    sym_eigenvalues(ata).into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// `sqrt(sum_{i > k} sigma_i^2)`.
pub fn eckart_young(sv: &[f64], k: usize) -> f64 {
    sv[k..].iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Numerical rank by modified Gram-Schmidt with a relative tolerance.
pub fn gram_rank(cols: &[Vec<f64>], rel_tol: f64) -> usize {
    let scale = cols.iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&v, b);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= p * y;
                }
            }
        }
        let n = dot(&v, &v).sqrt();
        if n > rel_tol * scale {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    basis.len()
}

pub fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
