//! Tensors over prime fields GF(p): exact rank of matrices, exhaustive
//! rank and symmetric rank searches for tiny tensors, and witnesses of
//! symmetric tensors outside the span of rank-one symmetric tensors.

use std::collections::HashSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tensor::sorted_indices;

/// Largest modulus accepted by the exact routines.
pub const MAX_PRIME: u64 = 97;
/// Exhaustive searches need `p^n` at most this for every mode size `n`.
pub const MAX_SEARCH_VECTORS: u64 = 64;
pub const MAX_SEARCH_TERMS: usize = 4;
/// Cap on distinct rank-one tensors enumerated by a search.
pub const MAX_RANK_ONE: usize = 1024;
/// `prop61_witness` needs `p^m` at most this.
pub const MAX_WITNESS_VECTORS: u64 = 256;

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|i| i * i <= p).all(|i| p % i != 0)
}

fn check_modulus(p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::CompositeModulus(p));
    }
    if p > MAX_PRIME {
        return invalid(format!("prime {p} exceeds {MAX_PRIME}"));
    }
    Ok(())
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // Fermat; p is prime and small
    let mut r = 1;
    let (mut b, mut e) = (a % p, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Dense tensor with residues in `[0, p)`, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GFTensor {
    pub p: u64,
    pub shape: Vec<usize>,
    pub entries: Vec<u64>,
}

impl GFTensor {
    /// Reduces `entries` modulo `p`.
    pub fn new(p: u64, shape: Vec<usize>, entries: Vec<i64>) -> Result<Self> {
        check_modulus(p)?;
        let len: usize = shape.iter().product();
        if shape.is_empty() || len == 0 || entries.len() != len {
            return Err(Error::ShapeMismatch(format!("{} entries for shape {shape:?}", entries.len())));
        }
        let entries = entries.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect();
        Ok(GFTensor { p, shape, entries })
    }

    /// Checks the modulus and that entries are reduced; used after
    /// deserializing.
    pub fn validate(&self) -> Result<()> {
        check_modulus(self.p)?;
        let len: usize = self.shape.iter().product();
        if self.shape.is_empty() || len == 0 || self.entries.len() != len {
            return Err(Error::ShapeMismatch(format!("{} entries for shape {:?}", self.entries.len(), self.shape)));
        }
        if let Some(x) = self.entries.iter().find(|&&x| x >= self.p) {
            return invalid(format!("entry {x} is not reduced modulo {}", self.p));
        }
        Ok(())
    }

    pub fn zeros(p: u64, shape: &[usize]) -> Result<Self> {
        Self::new(p, shape.to_vec(), vec![0; shape.iter().product()])
    }

    /// `u_1 (x) ... (x) u_d`.
    pub fn outer(p: u64, factors: &[Vec<u64>]) -> Result<Self> {
        check_modulus(p)?;
        let shape: Vec<usize> = factors.iter().map(Vec::len).collect();
        Ok(GFTensor { p, entries: outer_entries(p, factors), shape })
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn get(&self, idx: &[usize]) -> u64 {
        let mut flat = 0;
        for (i, n) in idx.iter().zip(&self.shape) {
            flat = flat * n + i;
        }
        self.entries[flat]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0)
    }

    pub fn cubical_size(&self) -> Option<usize> {
        let m = self.shape[0];
        self.shape.iter().all(|&n| n == m).then_some(m)
    }

    pub fn is_symmetric(&self) -> bool {
        if self.cubical_size().is_none() {
            return false;
        }
        let d = self.order();
        self.shape
            .iter()
            .map(|&n| 0..n)
            .multi_cartesian_product()
            .all(|idx| {
                let mut s = idx.clone();
                s.sort_unstable();
                self.get(&idx) == self.get(&s) || d < 2
            })
    }

    /// Applies the matrix `g` (rows of residues) to every mode.
    pub fn transform_all_modes(&self, g: &[Vec<u64>]) -> Result<GFTensor> {
        let m = self.cubical_size().ok_or_else(|| Error::ShapeMismatch("tensor is not cubical".into()))?;
        if g.len() != m || g.iter().any(|r| r.len() != m) {
            return Err(Error::ShapeMismatch(format!("need an {m}x{m} matrix")));
        }
        let p = self.p;
        let mut cur = self.entries.clone();
        let d = self.order();
        let size = cur.len();
        for mode in 0..d {
            let stride = m.pow((d - 1 - mode) as u32);
            let mut next = vec![0; size];
            for (flat, out) in next.iter_mut().enumerate() {
                let i = (flat / stride) % m;
                let base = flat - i * stride;
                *out = (0..m).map(|j| g[i][j] * cur[base + j * stride]).sum::<u64>() % p;
            }
            cur = next;
        }
        Ok(GFTensor { p, shape: self.shape.clone(), entries: cur })
    }
}

fn outer_entries(p: u64, factors: &[Vec<u64>]) -> Vec<u64> {
    factors
        .iter()
        .map(|u| u.iter())
        .multi_cartesian_product()
        .map(|xs| xs.into_iter().fold(1, |acc, &x| acc * (x % p) % p))
        .collect()
}

/// Rank of `rows` over GF(p) by Gaussian elimination.
pub fn gf_rank(rows: &[Vec<u64>], p: u64) -> Result<usize> {
    check_modulus(p)?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::ShapeMismatch("ragged matrix".into()));
    }
    let mut a: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    Ok(echelon(&mut a, p).len())
}

/// Reduces `a` to reduced row-echelon form in place and returns the pivot
/// columns; the first `len` rows are the nonzero ones.
fn echelon(a: &mut [Vec<u64>], p: u64) -> Vec<usize> {
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(piv) = (row..a.len()).find(|&r| a[r][col] != 0) else { continue };
        a.swap(row, piv);
        let inv = inv_mod(a[row][col], p);
        for x in a[row].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..a.len() {
            if r != row && a[r][col] != 0 {
                let f = a[r][col];
                for c in 0..cols {
                    a[r][c] = (a[r][c] + (p - f) * a[row][c]) % p;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == a.len() {
            break;
        }
    }
    pivots
}

/// All nonzero vectors of `GF(p)^n` in lexicographic order.
pub fn nonzero_vectors(p: u64, n: usize) -> Vec<Vec<u64>> {
    (0..n).map(|_| 0..p).multi_cartesian_product().filter(|v| v.iter().any(|&x| x != 0)).collect()
}

/// Nonzero vectors whose first nonzero entry is 1.
fn projective_points(p: u64, n: usize) -> Vec<Vec<u64>> {
    nonzero_vectors(p, n).into_iter().filter(|v| v.iter().find(|&&x| x != 0) == Some(&1)).collect()
}

fn check_search(p: u64, shape: &[usize], max_terms: usize) -> Result<()> {
    if max_terms > MAX_SEARCH_TERMS {
        return Err(Error::SearchTooLarge(format!("max_terms {max_terms} exceeds {MAX_SEARCH_TERMS}")));
    }
    for &n in shape {
        if p.checked_pow(n as u32).is_none_or(|c| c > MAX_SEARCH_VECTORS) {
            return Err(Error::SearchTooLarge(format!("{p}^{n} exceeds {MAX_SEARCH_VECTORS}")));
        }
    }
    Ok(())
}

fn add_into(p: u64, a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(&x, &y)| ((x as u64 + y as u64) % p) as u8).collect()
}

fn sub_into(p: u64, a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(&x, &y)| ((x as u64 + p - y as u64) % p) as u8).collect()
}

/// Smallest `s <= max_terms` with `target` a sum of `s` elements of
/// `atoms` (a set closed under nonzero scaling).
fn min_terms(p: u64, target: &[u8], atoms: &[Vec<u8>], max_terms: usize) -> Option<usize> {
    if target.iter().all(|&x| x == 0) {
        return Some(0);
    }
    let set: HashSet<&[u8]> = atoms.iter().map(Vec::as_slice).collect();
    if max_terms >= 1 && set.contains(target) {
        return Some(1);
    }
    if max_terms >= 2 && atoms.iter().any(|a| set.contains(sub_into(p, target, a).as_slice())) {
        return Some(2);
    }
    if max_terms < 3 {
        return None;
    }
    let pairs = || atoms.iter().enumerate().flat_map(|(i, a)| atoms[i..].iter().map(move |b| (a, b)));
    if pairs().any(|(a, b)| set.contains(sub_into(p, &sub_into(p, target, a), b).as_slice())) {
        return Some(3);
    }
    if max_terms < 4 {
        return None;
    }
    let sums: HashSet<Vec<u8>> = pairs().map(|(a, b)| add_into(p, a, b)).collect();
    sums.iter().any(|s| sums.contains(&sub_into(p, target, s))).then_some(4)
}

fn to_bytes(entries: &[u64]) -> Vec<u8> {
    entries.iter().map(|&x| x as u8).collect()
}

fn dedup_atoms(atoms: impl Iterator<Item = Vec<u8>>) -> Result<Vec<Vec<u8>>> {
    let atoms: Vec<Vec<u8>> = atoms.unique().collect();
    if atoms.len() > MAX_RANK_ONE {
        return Err(Error::SearchTooLarge(format!("{} distinct rank-one tensors exceed {MAX_RANK_ONE}", atoms.len())));
    }
    Ok(atoms)
}

/// Smallest `s <= max_terms` with `s = sum_j t_j u_j^{(x) d}` over GF(p);
/// `None` when no such expression exists within the bound.
pub fn srank_exhaustive(s: &GFTensor, max_terms: usize) -> Result<Option<usize>> {
    s.validate()?;
    if !s.is_symmetric() {
        return invalid("tensor is not symmetric");
    }
    check_search(s.p, &s.shape, max_terms)?;
    let (p, m, d) = (s.p, s.shape[0], s.order());
    let atoms = dedup_atoms(nonzero_vectors(p, m).into_iter().flat_map(|u| {
        (1..p).map(move |t| {
            let mut e = outer_entries(p, &vec![u.clone(); d]);
            for x in e.iter_mut() {
                *x = *x * t % p;
            }
            to_bytes(&e)
        })
    }))?;
    Ok(min_terms(p, &to_bytes(&s.entries), &atoms, max_terms))
}

/// Smallest `r <= max_terms` expressing `t` as a sum of `r` rank-one
/// tensors over GF(p).
pub fn rank_exhaustive(t: &GFTensor, max_terms: usize) -> Result<Option<usize>> {
    t.validate()?;
    check_search(t.p, &t.shape, max_terms)?;
    let p = t.p;
    let mut count: usize = nonzero_vectors(p, t.shape[0]).len();
    for &n in &t.shape[1..] {
        count = count.saturating_mul(projective_points(p, n).len());
    }
    if count > MAX_RANK_ONE {
        return Err(Error::SearchTooLarge(format!("{count} rank-one tensors exceed {MAX_RANK_ONE}")));
    }
    let mut modes = vec![nonzero_vectors(p, t.shape[0])];
    modes.extend(t.shape[1..].iter().map(|&n| projective_points(p, n)));
    let atoms = dedup_atoms(
        modes.iter().map(|vs| vs.iter()).multi_cartesian_product().map(|fs| {
            let fs: Vec<Vec<u64>> = fs.into_iter().cloned().collect();
            to_bytes(&outer_entries(p, &fs))
        }),
    )?;
    Ok(min_terms(p, &to_bytes(&t.entries), &atoms, max_terms))
}

/// Span of the rank-one symmetric tensors in `S(m, d, GF(p))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop61Report {
    pub p: u64,
    pub m: usize,
    pub d: usize,
    /// `C(m + d - 1, d)`.
    pub sym_dim: u64,
    /// `(p^m - 1) / (p - 1)`, the number of lines in `GF(p)^m`.
    pub lines: u64,
    pub inequality_holds: bool,
    pub span_dim: usize,
    /// A symmetric tensor outside the span, when the inequality holds.
    pub witness: Option<GFTensor>,
}

/// Coordinates of `u^{(x) d}` on the sorted multi-indices.
pub fn sym_power_coords(p: u64, u: &[u64], d: usize) -> Vec<u64> {
    sorted_indices(u.len(), d).iter().map(|idx| idx.iter().fold(1, |acc, &i| acc * u[i] % p)).collect()
}

/// Computes the span of `{u^{(x) d} : u != 0}` and, when
/// `C(m + d - 1, d) > (p^m - 1) / (p - 1)`, returns a symmetric tensor
/// outside it: the orbit indicator of the first non-pivot multi-index.
pub fn prop61_witness(p: u64, m: usize, d: usize) -> Result<Prop61Report> {
    check_modulus(p)?;
    if m == 0 || d == 0 {
        return invalid("m and d must be >= 1");
    }
    let vectors = p.checked_pow(m as u32).filter(|&c| c <= MAX_WITNESS_VECTORS);
    let Some(pm) = vectors else {
        return Err(Error::SearchTooLarge(format!("{p}^{m} exceeds {MAX_WITNESS_VECTORS}")));
    };
    let sym_dim = crate::linalg::binom((m + d - 1) as u64, d as u64);
    let lines = (pm - 1) / (p - 1);
    let mut rows: Vec<Vec<u64>> = projective_points(p, m).iter().map(|u| sym_power_coords(p, u, d)).collect();
    let pivots = echelon(&mut rows, p);
    let inequality_holds = sym_dim > lines;
    let witness = if inequality_holds {
        let col = (0..sym_dim as usize).find(|c| !pivots.contains(c)).expect("span is smaller than the space");
        Some(sym_indicator(p, m, d, col))
    } else {
        None
    };
    Ok(Prop61Report { p, m, d, sym_dim, lines, inequality_holds, span_dim: pivots.len(), witness })
}

/// Symmetric tensor with entry 1 on the orbit of the `col`-th sorted
/// multi-index and 0 elsewhere.
fn sym_indicator(p: u64, m: usize, d: usize, col: usize) -> GFTensor {
    let target = &sorted_indices(m, d)[col];
    let entries = (0..d)
        .map(|_| 0..m)
        .multi_cartesian_product()
        .map(|mut idx| {
            idx.sort_unstable();
            u64::from(&idx == target)
        })
        .collect();
    GFTensor { p, shape: vec![m; d], entries }
}

/// Coordinates of a symmetric tensor on the sorted multi-indices.
pub fn sym_coords(s: &GFTensor) -> Vec<u64> {
    sorted_indices(s.shape[0], s.order()).iter().map(|idx| s.get(idx)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example64 {
    pub tensor: GFTensor,
    pub rank: Option<usize>,
    pub srank: Option<usize>,
}

/// `e1 (x) e2 + e2 (x) e1` over GF(2): rank 2 but symmetric rank 3.
pub fn example64() -> Result<Example64> {
    let tensor = GFTensor::new(2, vec![2, 2], vec![0, 1, 1, 0])?;
    Ok(Example64 {
        rank: rank_exhaustive(&tensor, MAX_SEARCH_TERMS)?,
        srank: srank_exhaustive(&tensor, MAX_SEARCH_TERMS)?,
        tensor,
    })
}
