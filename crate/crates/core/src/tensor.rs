//! Dense and symmetric real tensors.
//!
//! [`DenseTensor`] stores entries row-major (last mode fastest). A
//! [`SymTensor`] keeps one value per sorted multi-index `i1 <= ... <= id`;
//! that value is the common entry of the densified tensor on the whole
//! `S_d` orbit of the index, not the orbit sum.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDense")]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDense {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawDense> for DenseTensor {
    type Error = Error;
    fn try_from(raw: RawDense) -> Result<Self> {
        DenseTensor::new(raw.shape, raw.data)
    }
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return invalid("tensor needs at least one mode");
        }
        if shape.iter().any(|&s| s == 0) {
            return invalid(format!("mode sizes must be positive, got {shape:?}"));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        DenseTensor { shape: shape.to_vec(), data: vec![0.0; len] }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = DenseTensor::zeros(shape);
        let mut idx = vec![0; shape.len()];
        for flat in 0..t.data.len() {
            t.data[flat] = f(&idx);
            increment(&mut idx, shape);
        }
        t
    }

    /// Cubical diagonal tensor of order `d` with the given diagonal.
    pub fn diagonal(d: usize, diag: &[f64]) -> Self {
        let m = diag.len();
        DenseTensor::from_fn(&vec![m; d], |idx| {
            if idx.iter().all(|&i| i == idx[0]) {
                diag[idx[0]]
            } else {
                0.0
            }
        })
    }

    /// Matrix (order 2) from a row-major slice.
    pub fn matrix(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        DenseTensor::new(vec![rows, cols], data.to_vec())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Common mode size if all modes are equal.
    pub fn cubical_size(&self) -> Option<usize> {
        let m = self.shape[0];
        self.shape.iter().all(|&s| s == m).then_some(m)
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.data)
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(())
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(DenseTensor { shape: self.shape.clone(), data })
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(DenseTensor { shape: self.shape.clone(), data })
    }

    pub fn scale(&self, s: f64) -> DenseTensor {
        DenseTensor { shape: self.shape.clone(), data: linalg::scaled(&self.data, s) }
    }

    pub fn dist(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(linalg::dist(&self.data, &other.data))
    }

    /// The `S_d` action `sigma(T)[i_1..i_d] = T[i_sigma(1) .. i_sigma(d)]`.
    ///
    /// `perm` is a permutation of `0..d`; the output has shape
    /// `shape[perm^-1(k)]` in mode `k`, which for cubical tensors is the
    /// same shape.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<DenseTensor> {
        let d = self.order();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return invalid(format!("{perm:?} is not a permutation of 0..{d}"));
        }
        let mut out_shape = vec![0; d];
        for (l, &p) in perm.iter().enumerate() {
            out_shape[p] = self.shape[l];
        }
        let src_strides = self.strides();
        Ok(DenseTensor::from_fn(&out_shape, |j| {
            let flat: usize = (0..d).map(|l| j[perm[l]] * src_strides[l]).sum();
            self.data[flat]
        }))
    }

    /// Swap modes `i` and `j`.
    pub fn transpose_modes(&self, i: usize, j: usize) -> Result<DenseTensor> {
        let mut perm: Vec<usize> = (0..self.order()).collect();
        if i >= perm.len() || j >= perm.len() {
            return invalid("mode index out of range");
        }
        perm.swap(i, j);
        self.permute_modes(&perm)
    }

    /// True when every adjacent mode transposition fixes the tensor within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.cubical_size().is_none() {
            return false;
        }
        (0..self.order().saturating_sub(1)).all(|i| {
            let s = self.transpose_modes(i, i + 1).expect("valid modes");
            linalg::dist(&s.data, &self.data) <= tol
        })
    }

    /// Mode-`mode` unfolding: rows indexed by that mode, columns by the
    /// remaining modes in row-major order.
    pub fn unfolding(&self, mode: usize) -> DMatrix<f64> {
        let rows = self.shape[mode];
        let cols = self.len() / rows;
        let mut m = DMatrix::zeros(rows, cols);
        let mut idx = vec![0; self.order()];
        for flat in 0..self.len() {
            let mut col = 0;
            for (k, &i) in idx.iter().enumerate() {
                if k != mode {
                    col = col * self.shape[k] + i;
                }
            }
            m[(idx[mode], col)] = self.data[flat];
            increment(&mut idx, &self.shape);
        }
        m
    }

    /// Contract every mode except `mode` with the given vectors (the entry
    /// for `mode` in `vectors` is ignored).
    pub fn contract_except(&self, mode: usize, vectors: &[&[f64]]) -> Vec<f64> {
        let mut out = vec![0.0; self.shape[mode]];
        let mut idx = vec![0; self.order()];
        for flat in 0..self.len() {
            let mut w = self.data[flat];
            for (k, &i) in idx.iter().enumerate() {
                if k != mode {
                    w *= vectors[k][i];
                }
            }
            out[idx[mode]] += w;
            increment(&mut idx, &self.shape);
        }
        out
    }

    /// Full contraction `T(x_1, ..., x_d)`.
    pub fn contract_all(&self, vectors: &[&[f64]]) -> f64 {
        let v = self.contract_except(0, vectors);
        linalg::dot(&v, vectors[0])
    }

    /// Multiply mode `k` by `mats[k]` for every mode (`T x_1 A_1 ... x_d A_d`).
    pub fn multilinear(&self, mats: &[DMatrix<f64>]) -> Result<DenseTensor> {
        if mats.len() != self.order() {
            return invalid("one matrix per mode required");
        }
        let mut cur = self.clone();
        for (k, a) in mats.iter().enumerate() {
            if a.ncols() != cur.shape[k] {
                return Err(Error::ShapeMismatch(format!("mode {k} matrix has {} columns", a.ncols())));
            }
            let mut shape = cur.shape.clone();
            shape[k] = a.nrows();
            let src = &cur;
            let next = DenseTensor::from_fn(&shape, |idx| {
                let mut j = idx.to_vec();
                let mut acc = 0.0;
                for c in 0..a.ncols() {
                    j[k] = c;
                    acc += a[(idx[k], c)] * src.get(&j);
                }
                acc
            });
            cur = next;
        }
        Ok(cur)
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Advance a row-major multi-index; wraps to all zeros after the last one.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Hilbert-Schmidt inner product.
pub fn hs_inner(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    x.check_same_shape(y)?;
    Ok(linalg::dot(&x.data, &y.data))
}

pub fn hs_norm(x: &DenseTensor) -> f64 {
    x.norm()
}

// ---------------------------------------------------------------------------
// Symmetric tensors

#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    m: usize,
    d: usize,
    coeffs: Vec<f64>,
}

/// Nondecreasing multi-indices (0-based) of length `d` over `0..m`, in
/// lexicographic order.
pub fn sorted_indices(m: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, d: usize, lo: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for v in lo..m {
            cur.push(v);
            rec(m, d, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, d, 0, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Position of a nondecreasing index in [`sorted_indices`] order.
pub fn sorted_rank(m: usize, idx: &[usize]) -> usize {
    let d = idx.len();
    let mut rank = 0u64;
    let mut prev = 0;
    for (p, &v) in idx.iter().enumerate() {
        let rest = (d - p - 1) as u64;
        for w in prev..v {
            // nondecreasing sequences of length `rest` over w..m
            rank += linalg::binom((m - w) as u64 + rest - 1, rest);
        }
        prev = v;
    }
    rank as usize
}

/// Size of the `S_d` orbit of a multi-index: `d! / prod(multiplicity!)`.
pub fn orbit_size(idx: &[usize]) -> u64 {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    let mut size: u64 = 1;
    let mut run = 0u64;
    for (p, &v) in sorted.iter().enumerate() {
        run = if p > 0 && sorted[p - 1] == v { run + 1 } else { 1 };
        // multiply by (p+1) / run incrementally keeps the value integral
        size = size * (p as u64 + 1) / run;
    }
    size
}

impl SymTensor {
    pub fn new(m: usize, d: usize, coeffs: Vec<f64>) -> Result<Self> {
        if m == 0 || d == 0 {
            return invalid("symmetric tensor needs m >= 1 and d >= 1");
        }
        let expected = linalg::binom((m + d - 1) as u64, d as u64) as usize;
        if coeffs.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "S({m},{d}) has {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(SymTensor { m, d, coeffs })
    }

    pub fn zeros(m: usize, d: usize) -> Self {
        let n = linalg::binom((m + d - 1) as u64, d as u64) as usize;
        SymTensor { m, d, coeffs: vec![0.0; n] }
    }

    /// `weight * u^{(x) d}`.
    pub fn power(weight: f64, u: &[f64], d: usize) -> Self {
        let m = u.len();
        let coeffs = sorted_indices(m, d)
            .iter()
            .map(|idx| weight * idx.iter().map(|&i| u[i]).product::<f64>())
            .collect();
        SymTensor { m, d, coeffs }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Entry at any (not necessarily sorted) multi-index.
    pub fn coeff(&self, idx: &[usize]) -> f64 {
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.coeffs[sorted_rank(self.m, &s)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let mut s = idx.to_vec();
        s.sort_unstable();
        let r = sorted_rank(self.m, &s);
        self.coeffs[r] = value;
    }

    pub fn densify(&self) -> DenseTensor {
        DenseTensor::from_fn(&vec![self.m; self.d], |idx| self.coeff(idx))
    }

    /// Coefficients against the orbit-sum basis normalized by orbit size,
    /// i.e. the sum of densified entries over each orbit.
    pub fn orbit_sums(&self) -> Vec<f64> {
        sorted_indices(self.m, self.d)
            .iter()
            .zip(&self.coeffs)
            .map(|(idx, &c)| c * orbit_size(idx) as f64)
            .collect()
    }

    /// Hilbert-Schmidt norm of the densified tensor.
    pub fn norm(&self) -> f64 {
        self.orbit_sums().iter().zip(&self.coeffs).map(|(s, c)| s * c).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &SymTensor) -> Result<SymTensor> {
        if (self.m, self.d) != (other.m, other.d) {
            return Err(Error::ShapeMismatch(format!(
                "S({},{}) vs S({},{})",
                self.m, self.d, other.m, other.d
            )));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(SymTensor { m: self.m, d: self.d, coeffs })
    }

    pub fn scale(&self, s: f64) -> SymTensor {
        SymTensor { m: self.m, d: self.d, coeffs: linalg::scaled(&self.coeffs, s) }
    }
}

impl Serialize for SymTensor {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        struct Coeffs<'a>(&'a SymTensor);
        impl Serialize for Coeffs<'_> {
            fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
                use serde::ser::SerializeMap;
                let mut map = ser.serialize_map(Some(self.0.coeffs.len()))?;
                for (idx, c) in sorted_indices(self.0.m, self.0.d).iter().zip(&self.0.coeffs) {
                    map.serialize_entry(&index_key(idx), c)?;
                }
                map.end()
            }
        }
        let mut st = ser.serialize_struct("SymTensor", 3)?;
        st.serialize_field("m", &self.m)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("coeffs", &Coeffs(self))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SymTensor {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            m: usize,
            d: usize,
            coeffs: BTreeMap<String, f64>,
        }
        let raw = Raw::deserialize(de)?;
        let mut t = SymTensor::new(raw.m, raw.d, vec![0.0; linalg::binom((raw.m + raw.d).saturating_sub(1) as u64, raw.d as u64) as usize])
            .map_err(serde::de::Error::custom)?;
        for (key, v) in raw.coeffs {
            let idx = parse_index_key(&key, raw.m, raw.d).map_err(serde::de::Error::custom)?;
            t.set(&idx, v);
        }
        Ok(t)
    }
}

/// `"1,2,2"` style key (1-based) for a 0-based index.
pub fn index_key(idx: &[usize]) -> String {
    idx.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn parse_index_key(key: &str, m: usize, d: usize) -> Result<Vec<usize>> {
    let idx: Vec<usize> = key
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| Error::InvalidInput(format!("key {key:?}: {e}"))))
        .collect::<Result<_>>()?;
    if idx.len() != d || idx.iter().any(|&i| i == 0 || i > m) {
        return invalid(format!("key {key:?} is not a multi-index of S({m},{d})"));
    }
    Ok(idx.into_iter().map(|i| i - 1).collect())
}

/// Average of `t` over each `S_d` orbit: the orthogonal projection onto
/// symmetric tensors.
pub fn symmetrize(t: &DenseTensor) -> Result<SymTensor> {
    let m = t.cubical_size().ok_or_else(|| {
        Error::ShapeMismatch(format!("symmetrize needs equal mode sizes, got {:?}", t.shape()))
    })?;
    let d = t.order();
    let mut out = SymTensor::zeros(m, d);
    let mut counts = vec![0u64; out.coeffs.len()];
    let mut idx = vec![0; d];
    let mut sorted = vec![0; d];
    for &v in &t.data {
        sorted.copy_from_slice(&idx);
        sorted.sort_unstable();
        let r = sorted_rank(m, &sorted);
        out.coeffs[r] += v;
        counts[r] += 1;
        increment(&mut idx, &t.shape);
    }
    for (c, n) in out.coeffs.iter_mut().zip(counts) {
        *c /= n as f64;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Rank-one terms and mode grouping

/// `weight * f_1 (x) ... (x) f_d` with unit-norm factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneTerm {
    pub weight: f64,
    pub factors: Vec<Vec<f64>>,
}

impl RankOneTerm {
    /// Normalizes every factor, moving magnitudes into the weight.
    pub fn new(weight: f64, factors: Vec<Vec<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return invalid("rank-one term needs at least one factor");
        }
        let mut weight = weight;
        let mut out = Vec::with_capacity(factors.len());
        for f in factors {
            let n = linalg::norm(&f);
            if !(n > 0.0) || !n.is_finite() {
                return invalid("rank-one factors must be finite and nonzero");
            }
            weight *= n;
            out.push(linalg::scaled(&f, 1.0 / n));
        }
        Ok(RankOneTerm { weight, factors: out })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Vec::len).collect()
    }

    pub fn dense(&self) -> DenseTensor {
        rank_one(self)
    }
}

/// Outer product of the factors scaled by the weight.
pub fn rank_one(term: &RankOneTerm) -> DenseTensor {
    let shape = term.shape();
    DenseTensor::from_fn(&shape, |idx| {
        idx.iter().zip(&term.factors).fold(term.weight, |acc, (&i, f)| acc * f[i])
    })
}

/// `weight * u^{(x) d}` with a unit vector `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymRankOneTerm {
    pub weight: f64,
    pub factor: Vec<f64>,
}

impl SymRankOneTerm {
    /// Normalizes `u`; the weight is kept as given (so `t_j = +-1` survives).
    pub fn new(weight: f64, u: Vec<f64>) -> Result<Self> {
        let n = linalg::norm(&u);
        if !(n > 0.0) || !n.is_finite() {
            return invalid("symmetric rank-one factor must be finite and nonzero");
        }
        Ok(SymRankOneTerm { weight, factor: linalg::scaled(&u, 1.0 / n) })
    }

    pub fn to_rank_one(&self, d: usize) -> RankOneTerm {
        RankOneTerm { weight: self.weight, factors: vec![self.factor.clone(); d] }
    }
}

/// Sum of rank-one terms (all of the same shape).
pub fn sum_terms(terms: &[RankOneTerm]) -> Result<DenseTensor> {
    let first = terms.first().ok_or_else(|| Error::InvalidInput("no terms".into()))?;
    let mut acc = rank_one(first);
    for t in &terms[1..] {
        acc = acc.add(&rank_one(t))?;
    }
    Ok(acc)
}

/// Grouping of `d = a + b + c` modes into three consecutive blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSplit {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl ModeSplit {
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        if a == 0 || b == 0 || c == 0 {
            return invalid(format!("split ({a},{b},{c}) must have positive parts"));
        }
        Ok(ModeSplit { a, b, c })
    }

    /// `(1, floor((d-1)/2), ceil((d-1)/2))`.
    pub fn canonical(d: usize) -> Result<Self> {
        if d < 3 {
            return invalid(format!("canonical split needs d >= 3, got {d}"));
        }
        ModeSplit::new(1, (d - 1) / 2, d / 2)
    }

    pub fn total(&self) -> usize {
        self.a + self.b + self.c
    }

    pub fn parts(&self) -> [usize; 3] {
        [self.a, self.b, self.c]
    }
}

/// View an order-`d` cubical tensor as a 3-mode tensor of shape
/// `(m^a, m^b, m^c)`. With row-major storage this is a pure reshape.
pub fn unfold_split(t: &DenseTensor, s: ModeSplit) -> Result<DenseTensor> {
    let m = t
        .cubical_size()
        .ok_or_else(|| Error::ShapeMismatch(format!("unfold_split needs equal modes, got {:?}", t.shape())))?;
    if s.total() != t.order() {
        return Err(Error::ShapeMismatch(format!(
            "split {:?} does not sum to order {}",
            s.parts(),
            t.order()
        )));
    }
    let shape = s.parts().iter().map(|&p| m.pow(p as u32)).collect();
    DenseTensor::new(shape, t.data.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, m: usize) -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        v
    }

    fn outer(vs: &[Vec<f64>]) -> DenseTensor {
        RankOneTerm { weight: 1.0, factors: vs.to_vec() }.dense()
    }

    #[test]
    fn hs_inner_examples() {
        let e11 = outer(&[e(0, 2), e(0, 2)]);
        assert_eq!(hs_inner(&e11, &e11).unwrap(), 1.0);
        let e12 = outer(&[e(0, 2), e(1, 2)]);
        let e21 = outer(&[e(1, 2), e(0, 2)]);
        assert_eq!(hs_inner(&e12, &e21).unwrap(), 0.0);
        let d = DenseTensor::matrix(2, 2, &[3.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(hs_inner(&d, &d).unwrap(), 13.0);
        assert!((hs_norm(&d) - 13f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hs_inner_shape_mismatch() {
        let a = DenseTensor::zeros(&[2, 2]);
        let b = DenseTensor::zeros(&[4]);
        assert!(matches!(hs_inner(&a, &b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn constructor_validates() {
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
        assert!(DenseTensor::new(vec![], vec![]).is_err());
        assert!(SymTensor::new(2, 3, vec![0.0; 3]).is_err());
        assert_eq!(SymTensor::zeros(3, 4).coeffs().len(), 15);
    }

    #[test]
    fn symmetrize_two_element_orbit() {
        let s = symmetrize(&outer(&[e(0, 2), e(1, 2)])).unwrap();
        assert_eq!(s.coeff(&[0, 1]), 0.5);
        assert_eq!(s.coeff(&[0, 0]), 0.0);
        assert_eq!(s.coeff(&[1, 1]), 0.0);
    }

    #[test]
    fn symmetrize_three_element_orbit() {
        let t = outer(&[e(0, 2), e(1, 2), e(1, 2)])
            .add(&outer(&[e(1, 2), e(0, 2), e(1, 2)]))
            .unwrap()
            .add(&outer(&[e(1, 2), e(1, 2), e(0, 2)]))
            .unwrap();
        let s = symmetrize(&t).unwrap();
        assert_eq!(s.coeff(&[0, 1, 1]), 1.0);
        assert_eq!(s.coeff(&[0, 0, 0]), 0.0);
        assert_eq!(s.coeff(&[1, 1, 1]), 0.0);
        assert_eq!(s.coeff(&[0, 0, 1]), 0.0);
    }

    #[test]
    fn symmetrize_rejects_rectangular() {
        assert!(symmetrize(&DenseTensor::zeros(&[2, 3])).is_err());
    }

    #[test]
    fn sorted_rank_matches_enumeration() {
        for (m, d) in [(1, 3), (2, 3), (3, 3), (4, 2), (3, 5)] {
            for (pos, idx) in sorted_indices(m, d).iter().enumerate() {
                assert_eq!(sorted_rank(m, idx), pos, "m={m} d={d} idx={idx:?}");
            }
        }
    }

    #[test]
    fn orbit_sizes() {
        assert_eq!(orbit_size(&[0, 0, 0]), 1);
        assert_eq!(orbit_size(&[0, 1, 1]), 3);
        assert_eq!(orbit_size(&[0, 1, 2]), 6);
        assert_eq!(orbit_size(&[1, 0, 1, 0]), 6);
        // orbit sizes partition m^d
        let total: u64 = sorted_indices(3, 4).iter().map(|i| orbit_size(i)).sum();
        assert_eq!(total, 81);
    }

    #[test]
    fn sym_norm_matches_dense() {
        let s = SymTensor::new(2, 3, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        assert!((s.norm() - s.densify().norm()).abs() < 1e-12);
    }

    #[test]
    fn rank_one_examples() {
        let t = rank_one(&RankOneTerm::new(1.0, vec![e(0, 2), e(0, 2), e(0, 2)]).unwrap());
        assert_eq!(t.get(&[0, 0, 0]), 1.0);
        assert_eq!(t.norm(), 1.0);
        let t = rank_one(&RankOneTerm::new(-2.0, vec![e(0, 2), e(1, 2)]).unwrap());
        assert_eq!(t.data(), &[0.0, -2.0, 0.0, 0.0]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = rank_one(&RankOneTerm::new(1.0, vec![vec![h, h]; 3]).unwrap());
        for &v in t.data() {
            assert!((v - 2f64.powf(-1.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn rank_one_absorbs_norms() {
        let t = RankOneTerm::new(1.0, vec![vec![3.0, 4.0], vec![0.0, -2.0]]).unwrap();
        assert!((t.weight - 10.0).abs() < 1e-12);
        assert!((rank_one(&t).norm() - 10.0).abs() < 1e-12);
        assert!(RankOneTerm::new(1.0, vec![vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn unfold_split_identity_and_rank_one() {
        let t = DenseTensor::from_fn(&[2, 2, 2], |i| (i[0] * 4 + i[1] * 2 + i[2]) as f64);
        let u = unfold_split(&t, ModeSplit::new(1, 1, 1).unwrap()).unwrap();
        assert_eq!(u, t);

        let v = vec![0.6, 0.8];
        let t = outer(&[v.clone(), v.clone(), v.clone(), v.clone()]);
        let u = unfold_split(&t, ModeSplit::new(1, 1, 2).unwrap()).unwrap();
        assert_eq!(u.shape(), &[2, 2, 4]);
        let vv = outer(&[v.clone(), v.clone()]).into_data();
        let expect = outer(&[v.clone(), v, vv]);
        assert_eq!(u.shape(), expect.shape());
        assert!(u.dist(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn unfold_split_preserves_flattening_spectrum() {
        let mut rng = crate::rng::seeded(11);
        let t = DenseTensor::new(vec![2; 4], crate::rng::gaussian_vec(&mut rng, 16)).unwrap();
        let u = unfold_split(&t, ModeSplit::new(1, 1, 2).unwrap()).unwrap();
        // mode-3 flattening of u groups the last two modes of t
        let a = linalg::singular_values(&u.unfolding(2));
        let tm = DMatrix::from_fn(4, 4, |r, c| t.get(&[c / 2, c % 2, r / 2, r % 2]));
        let b = linalg::singular_values(&tm);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn unfold_split_rejects_mismatch() {
        let t = DenseTensor::zeros(&[2, 2, 2]);
        assert!(unfold_split(&t, ModeSplit::new(1, 1, 2).unwrap()).is_err());
        assert!(ModeSplit::new(0, 1, 2).is_err());
        assert_eq!(ModeSplit::canonical(4).unwrap().parts(), [1, 1, 2]);
        assert_eq!(ModeSplit::canonical(5).unwrap().parts(), [1, 2, 2]);
    }

    #[test]
    fn permute_modes_action() {
        let t = outer(&[e(0, 2), e(1, 2), e(1, 2)]);
        let s = t.permute_modes(&[1, 2, 0]).unwrap();
        // sigma(T)[i1,i2,i3] = T[i2,i3,i1]: nonzero where i2=0, i3=1, i1=1
        assert_eq!(s.get(&[1, 0, 1]), 1.0);
        assert!(t.permute_modes(&[0, 0, 1]).is_err());
    }

    #[test]
    fn unfolding_layout() {
        let t = DenseTensor::from_fn(&[2, 3], |i| (i[0] * 3 + i[1]) as f64);
        assert_eq!(t.unfolding(0), DMatrix::from_row_slice(2, 3, &[0., 1., 2., 3., 4., 5.]));
        assert_eq!(t.unfolding(1), DMatrix::from_row_slice(3, 2, &[0., 3., 1., 4., 2., 5.]));
    }

    #[test]
    fn json_round_trip() {
        let t = DenseTensor::new(vec![2, 1], vec![0.1, -1e-300]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<DenseTensor>(&s).unwrap(), t);
        assert!(serde_json::from_str::<DenseTensor>(r#"{"shape":[2],"data":[1.0]}"#).is_err());

        let sym = SymTensor::new(2, 3, vec![0.1, 1.0 / 3.0, -2.5, 7.0]).unwrap();
        let s = serde_json::to_string(&sym).unwrap();
        assert!(s.contains(r#""1,2,2":-2.5"#), "{s}");
        assert_eq!(serde_json::from_str::<SymTensor>(&s).unwrap(), sym);
    }
}
