//! Exact symmetric decompositions over the rationals: the mixed powers
//! `S_{k,d-k}(u, v)` appearing in the expansion of `(tu + v)^{(x) d}`,
//! their extraction by Vandermonde inversion, and a basis of `S(m, d)`
//! made of `d`-th powers of integer vectors.

use itertools::Itertools;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::tensor::{sorted_indices, SymTensor};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `"p/q"` rendering used in JSON output.
pub fn format_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let parse = |t: &str| t.trim().parse::<BigInt>().map_err(|_| Error::InvalidInput(format!("bad rational {s:?}")));
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse(d)?;
            if d.is_zero() {
                return invalid(format!("zero denominator in {s:?}"));
            }
            Ok(Q::new(parse(n)?, d))
        }
        None => Ok(Q::from_integer(parse(s)?)),
    }
}

fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Symmetric tensor over the rationals, one entry per sorted multi-index
/// (lexicographic order), like [`SymTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct QSymTensor {
    m: usize,
    d: usize,
    coeffs: Vec<Q>,
}

impl QSymTensor {
    pub fn zeros(m: usize, d: usize) -> Self {
        let n = sym_dim(m, d) as usize;
        QSymTensor { m, d, coeffs: vec![Q::zero(); n] }
    }

    /// `c * v^{(x) d}`.
    pub fn power(c: &Q, v: &[Q], d: usize) -> Self {
        let coeffs = sorted_indices(v.len(), d)
            .iter()
            .map(|idx| idx.iter().fold(c.clone(), |acc, &i| acc * &v[i]))
            .collect();
        QSymTensor { m: v.len(), d, coeffs }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn add_assign(&mut self, other: &QSymTensor) {
        assert_eq!((self.m, self.d), (other.m, other.d), "symmetric tensors of different type");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn scaled(&self, c: &Q) -> QSymTensor {
        QSymTensor { m: self.m, d: self.d, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn to_f64(&self) -> SymTensor {
        SymTensor::new(self.m, self.d, self.coeffs.iter().map(to_f64).collect()).expect("coefficient count matches")
    }
}

/// `C(m + d - 1, d)`.
pub fn sym_dim(m: usize, d: usize) -> u64 {
    linalg::binom((m + d).saturating_sub(1) as u64, d as u64)
}

fn check_vectors(u: &[Q], v: &[Q]) -> Result<()> {
    if u.is_empty() || u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!("u and v must have the same positive length, got {} and {}", u.len(), v.len())));
    }
    Ok(())
}

/// `S_{k,d-k}(u, v)`: the sum of all tensor products with `k` factors `u`
/// and `d - k` factors `v`, i.e. the coefficient of `t^k` in
/// `(tu + v)^{(x) d}`.
pub fn mixed_power(u: &[Q], v: &[Q], k: usize, d: usize) -> Result<QSymTensor> {
    check_vectors(u, v)?;
    if k > d {
        return invalid(format!("k={k} must lie in 0..=d={d}"));
    }
    let coeffs = sorted_indices(u.len(), d)
        .iter()
        .map(|idx| {
            (0..d)
                .combinations(k)
                .map(|pos| {
                    let mut acc = Q::one();
                    let mut next = pos.iter().peekable();
                    for (l, &i) in idx.iter().enumerate() {
                        if next.peek() == Some(&&l) {
                            next.next();
                            acc *= &u[i];
                        } else {
                            acc *= &v[i];
                        }
                    }
                    acc
                })
                .fold(Q::zero(), |a, b| a + b)
        })
        .collect();
    Ok(QSymTensor { m: u.len(), d, coeffs })
}

/// `sum_i c_i v_i^{(x) d}` with exact coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCombination {
    pub d: usize,
    pub terms: Vec<(Q, Vec<Q>)>,
}

impl SymCombination {
    pub fn densify(&self) -> QSymTensor {
        let m = self.terms.first().map_or(0, |t| t.1.len());
        let mut acc = QSymTensor::zeros(m, self.d);
        for (c, v) in &self.terms {
            acc.add_assign(&QSymTensor::power(c, v, self.d));
        }
        acc
    }
}

#[derive(Serialize, Deserialize)]
struct RawTerm {
    coeff: String,
    vector: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawCombination {
    d: usize,
    terms: Vec<RawTerm>,
}

impl Serialize for SymCombination {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawCombination {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(c, v)| RawTerm { coeff: format_q(c), vector: v.iter().map(format_q).collect() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymCombination {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawCombination::deserialize(de)?;
        let terms = raw
            .terms
            .iter()
            .map(|t| {
                let c = parse_q(&t.coeff)?;
                let v = t.vector.iter().map(|x| parse_q(x)).collect::<Result<Vec<_>>>()?;
                Ok((c, v))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Ok(SymCombination { d: raw.d, terms })
    }
}

/// Solves `a x = b` exactly; `None` when `a` is singular.
pub fn solve_exact(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &p;
                for c in col..n {
                    let delta = &f * &a[col][c];
                    a[r][c] -= delta;
                }
                let delta = &f * &b[col];
                b[r] -= delta;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Exact determinant by fraction-based elimination.
pub fn det_exact(mut a: Vec<Vec<Q>>) -> Q {
    let n = a.len();
    let mut det = Q::one();
    for col in 0..n {
        let piv = match (col..n).find(|&r| !a[r][col].is_zero()) {
            Some(p) => p,
            None => return Q::zero(),
        };
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if !a[r][col].is_zero() {
                let f = &a[r][col] / &p;
                for c in col..n {
                    let delta = &f * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    det
}

/// Writes `S_{k,d-k}(u, v)` as a rational combination of the powers
/// `(tau_i u + v)^{(x) d}` for the `d` nodes `tau_i` and of `u^{(x) d}`, by
/// inverting the Vandermonde matrix `[tau_i^j]` exactly.
pub fn vandermonde_decompose(u: &[Q], v: &[Q], k: usize, d: usize, nodes: &[Q]) -> Result<SymCombination> {
    check_vectors(u, v)?;
    if d == 0 || k > d {
        return invalid(format!("need d >= 1 and 0 <= k <= d, got k={k}, d={d}"));
    }
    if nodes.len() != d {
        return invalid(format!("need exactly d={d} nodes, got {}", nodes.len()));
    }
    if nodes.iter().tuple_combinations().any(|(a, b)| a == b) {
        return invalid("Vandermonde nodes must be pairwise distinct");
    }
    if k == d {
        return Ok(SymCombination { d, terms: vec![(Q::one(), u.to_vec())] });
    }
    let pow = |t: &Q, e: usize| (0..e).fold(Q::one(), |acc, _| acc * t);
    // row k of V^{-1} solves V^T c = e_k
    let vt: Vec<Vec<Q>> = (0..d).map(|j| nodes.iter().map(|t| pow(t, j)).collect()).collect();
    let mut e = vec![Q::zero(); d];
    e[k] = Q::one();
    let c = solve_exact(vt, e).expect("distinct nodes give an invertible Vandermonde matrix");
    let mut terms = Vec::new();
    let mut u_coeff = Q::zero();
    for (ci, t) in c.iter().zip(nodes) {
        if ci.is_zero() {
            continue;
        }
        let w: Vec<Q> = u.iter().zip(v).map(|(a, b)| t * a + b).collect();
        u_coeff -= ci * pow(t, d);
        terms.push((ci.clone(), w));
    }
    if !u_coeff.is_zero() {
        terms.push((u_coeff, u.to_vec()));
    }
    Ok(SymCombination { d, terms })
}

/// `0, 1, ..., d-1`.
pub fn default_nodes(d: usize) -> Vec<Q> {
    (0..d as i64).map(q).collect()
}

/// Integer vectors whose `d`-th powers form a basis of `S(m, d)`, with the
/// determinant of their coordinate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBasis {
    pub m: usize,
    pub d: usize,
    pub vectors: Vec<Vec<i64>>,
    pub determinant: Q,
}

impl Serialize for PowerBasis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Raw<'a> {
            m: usize,
            d: usize,
            vectors: &'a [Vec<i64>],
            determinant: String,
        }
        Raw { m: self.m, d: self.d, vectors: &self.vectors, determinant: format_q(&self.determinant) }.serialize(s)
    }
}

/// Rows are the coordinates of `v^{(x) d}` on sorted multi-indices.
pub fn power_matrix(vectors: &[Vec<i64>], d: usize) -> Vec<Vec<Q>> {
    vectors
        .iter()
        .map(|v| {
            let qv: Vec<Q> = v.iter().map(|&x| q(x)).collect();
            QSymTensor::power(&Q::one(), &qv, d).coeffs
        })
        .collect()
}

/// Candidates in order: the pure powers `e_1, ..., e_{m-1}`, then
/// `e_m + sum_j t_j e_j` for `t` in `{0, ..., d-1}^{m-1}` in lexicographic
/// order. The `d`-th powers of the grid vectors span every monomial of
/// degree below `d` in each `t_j`, and the pure powers supply the
/// remaining `t_j^d`; independent candidates are kept greedily with exact
/// elimination.
pub fn power_basis(m: usize, d: usize) -> Result<PowerBasis> {
    if m < 1 || d < 1 {
        return invalid("power_basis needs m, d >= 1");
    }
    let n = sym_dim(m, d) as usize;
    let mut candidates: Vec<Vec<i64>> = (0..m - 1)
        .map(|j| {
            let mut e = vec![0; m];
            e[j] = 1;
            e
        })
        .collect();
    let grid = (0..m - 1).map(|_| 0..d as i64).multi_cartesian_product();
    if m == 1 {
        candidates.push(vec![1]);
    } else {
        for t in grid {
            let mut v = t;
            v.push(1);
            candidates.push(v);
        }
    }
    let mut chosen = Vec::new();
    let mut echelon: Vec<(usize, Vec<Q>)> = Vec::new();
    for v in candidates {
        if chosen.len() == n {
            break;
        }
        let mut row = power_matrix(std::slice::from_ref(&v), d).pop().expect("one row");
        for (p, r) in &echelon {
            if !row[*p].is_zero() {
                let f = &row[*p] / &r[*p];
                for (a, b) in row.iter_mut().zip(r) {
                    *a -= &f * b;
                }
            }
        }
        if let Some(p) = row.iter().position(|x| !x.is_zero()) {
            echelon.push((p, row));
            chosen.push(v);
        }
    }
    let determinant = det_exact(power_matrix(&chosen, d));
    if chosen.len() != n || determinant.is_zero() {
        return Err(Error::InvalidInput(format!("grid candidates did not span S({m},{d})")));
    }
    Ok(PowerBasis { m, d, vectors: chosen, determinant })
}

/// Coordinates of `s` in the basis of `d`-th powers of `basis` vectors.
pub fn express_in_basis(s: &QSymTensor, basis: &PowerBasis) -> Result<Vec<Q>> {
    let a = power_matrix(&basis.vectors, basis.d);
    let n = a.len();
    if s.coeffs.len() != n {
        return Err(Error::ShapeMismatch("tensor does not match the basis".into()));
    }
    let at: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| a[j][i].clone()).collect()).collect();
    solve_exact(at, s.coeffs.clone()).ok_or_else(|| Error::InvalidInput("basis matrix is singular".into()))
}

/// `true` when the magnitudes of every entry of `x` are at most `bound`.
pub fn all_bounded(x: &[Q], bound: i64) -> bool {
    x.iter().all(|v| v.abs() <= q(bound))
}
