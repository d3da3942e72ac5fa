//! Kruskal ranks, the Kruskal uniqueness condition for 3-mode
//! decompositions, and rank certificates for order-`d` decompositions
//! grouped into three modes.

use itertools::Itertools;
use nalgebra::DMatrix;
use num::rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::tensor::{ModeSplit, RankOneTerm, SymRankOneTerm};

/// Independence cutoff relative to the largest singular value of the full
/// column set.
pub const INDEPENDENCE_TOL: f64 = 1e-10;

/// Exhaustive subset enumeration is refused beyond this many columns.
pub const MAX_COLUMNS: usize = 24;

pub type Rational = Ratio<i64>;

fn columns_matrix(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let n = cols[0].len();
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

fn check_columns(cols: &[Vec<f64>]) -> Result<()> {
    let first = cols.first().ok_or_else(|| Error::InvalidInput("no columns".into()))?;
    if first.is_empty() || cols.iter().any(|c| c.len() != first.len()) {
        return Err(Error::ShapeMismatch("columns must be nonempty and of equal length".into()));
    }
    if cols.len() > MAX_COLUMNS {
        return Err(Error::SearchTooLarge(format!("{} columns, at most {MAX_COLUMNS} supported", cols.len())));
    }
    if cols.iter().any(|c| !c.iter().all(|v| v.is_finite())) {
        return invalid("columns must be finite");
    }
    if cols.iter().any(|c| c.iter().all(|&v| v == 0.0)) {
        return invalid("Kruskal rank is undefined for a zero column");
    }
    Ok(())
}

/// Whether every `size`-subset of columns is linearly independent.
fn subsets_independent(cols: &[Vec<f64>], size: usize, scale: f64) -> bool {
    if size == 0 {
        return true;
    }
    if size > cols[0].len() {
        return false;
    }
    let subsets: Vec<Vec<usize>> = (0..cols.len()).combinations(size).collect();
    subsets.par_iter().all(|s| {
        let sub: Vec<Vec<f64>> = s.iter().map(|&j| cols[j].clone()).collect();
        let sv = linalg::singular_values(&columns_matrix(&sub));
        sv.last().copied().unwrap_or(0.0) > INDEPENDENCE_TOL * scale
    })
}

fn largest_singular(cols: &[Vec<f64>]) -> f64 {
    linalg::singular_values(&columns_matrix(cols))[0]
}

/// Largest `k` such that every `k` columns are linearly independent.
pub fn krank(cols: &[Vec<f64>]) -> Result<usize> {
    check_columns(cols)?;
    let scale = largest_singular(cols);
    let mut k = 0;
    while k < cols.len() && subsets_independent(cols, k + 1, scale) {
        k += 1;
    }
    Ok(k)
}

/// Columns of the three factor matrices `Y`, `Z`, `W` of
/// `sum_j y_j (x) z_j (x) w_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorBundle {
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

impl FactorBundle {
    pub fn new(y: Vec<Vec<f64>>, z: Vec<Vec<f64>>, w: Vec<Vec<f64>>) -> Result<Self> {
        let r = y.len();
        if r == 0 || z.len() != r || w.len() != r {
            return Err(Error::ShapeMismatch(format!(
                "factor matrices need the same positive number of columns, got {}, {}, {}",
                y.len(),
                z.len(),
                w.len()
            )));
        }
        for m in [&y, &z, &w] {
            check_columns(m)?;
        }
        Ok(FactorBundle { y, z, w })
    }

    pub fn from_matrices(y: &DMatrix<f64>, z: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<Self> {
        let cols = |m: &DMatrix<f64>| m.column_iter().map(|c| c.iter().copied().collect()).collect();
        FactorBundle::new(cols(y), cols(z), cols(w))
    }

    pub fn r(&self) -> usize {
        self.y.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KruskalCertificate {
    pub kappas: [usize; 3],
    pub r: usize,
    /// `kappa_1 + kappa_2 + kappa_3 >= 2r + 2`.
    pub condition_met: bool,
    pub rank_certified: Option<usize>,
    pub uniqueness_certified: bool,
    /// Genericity of the grouped factors, for certificates built from an
    /// order-`d` decomposition.
    pub generic: Option<bool>,
    /// Term-count bound as an exact fraction `"p/q"` and its value.
    pub bound: Option<String>,
    pub bound_value: Option<f64>,
    pub within_bound: Option<bool>,
    /// For symmetric input: rank and symmetric rank both equal `r`.
    pub srank_certified: Option<usize>,
    pub verdict: String,
    pub factors: FactorBundle,
}

/// Kruskal ranks of `Y, Z, W` and the resulting rank/uniqueness claim.
pub fn certify(f: &FactorBundle) -> Result<KruskalCertificate> {
    let kappas = [krank(&f.y)?, krank(&f.z)?, krank(&f.w)?];
    let r = f.r();
    let condition_met = kappas.iter().sum::<usize>() >= 2 * r + 2;
    Ok(KruskalCertificate {
        kappas,
        r,
        condition_met,
        rank_certified: condition_met.then_some(r),
        uniqueness_certified: condition_met,
        generic: None,
        bound: None,
        bound_value: None,
        within_bound: None,
        srank_certified: None,
        verdict: if condition_met { "certified" } else { "kruskal condition fails" }.to_string(),
        factors: f.clone(),
    })
}

fn fraction_string(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn rational_value(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn lower_half(d: usize) -> usize {
    (d - 1) / 2
}

/// Bound on the number of symmetric terms for which generic decompositions
/// are rank-certified: `C(m+(d-3)/2, m-1) + (m-2)/2` for odd `d` and
/// `C(m+(d-4)/2, m-1) + m - 2` for even `d`.
pub fn n_bound(m: usize, d: usize) -> Result<Rational> {
    if m < 2 || d < 3 {
        return invalid(format!("n_bound needs m >= 2 and d >= 3, got m={m}, d={d}"));
    }
    let b = lower_half(d) as u64;
    let m64 = m as u64;
    let base = linalg::binom(m64 + b - 1, m64 - 1) as i64;
    Ok(if d % 2 == 1 {
        Rational::from_integer(base) + Rational::new(m as i64 - 2, 2)
    } else {
        Rational::from_integer(base + m as i64 - 2)
    })
}

/// The analogous bound for non-symmetric tensors: `m^b + (m-2)/2` for odd
/// `d = 2b+1` and `m^b + m - 2` for even `d = 2b+2`.
pub fn tensor_n_bound(m: usize, d: usize) -> Result<Rational> {
    if m < 2 || d < 3 {
        return invalid(format!("tensor_n_bound needs m >= 2 and d >= 3, got m={m}, d={d}"));
    }
    let b = lower_half(d) as u32;
    let base = (m as i64).pow(b);
    Ok(if d % 2 == 1 {
        Rational::from_integer(base) + Rational::new(m as i64 - 2, 2)
    } else {
        Rational::from_integer(base + m as i64 - 2)
    })
}

/// Kronecker product of vectors, first factor varying slowest.
pub fn kron(vs: &[&[f64]]) -> Vec<f64> {
    vs.iter().fold(vec![1.0], |acc, v| acc.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect())
}

fn grouped(terms: &[RankOneTerm], s: ModeSplit) -> [Vec<Vec<f64>>; 3] {
    let bounds = [0, s.a, s.a + s.b, s.total()];
    let group = |g: usize| -> Vec<Vec<f64>> {
        terms
            .iter()
            .map(|t| {
                let fs: Vec<&[f64]> = t.factors[bounds[g]..bounds[g + 1]].iter().map(Vec::as_slice).collect();
                let mut v = kron(&fs);
                if g == 0 {
                    v.iter_mut().for_each(|x| *x *= t.weight);
                }
                v
            })
            .collect()
    };
    [group(0), group(1), group(2)]
}

fn check_terms(terms: &[RankOneTerm], s: ModeSplit) -> Result<usize> {
    let first = terms.first().ok_or_else(|| Error::InvalidInput("no terms".into()))?;
    let d = first.order();
    if terms.iter().any(|t| t.shape() != first.shape()) {
        return Err(Error::ShapeMismatch("all terms must have the same shape".into()));
    }
    if s.total() != d {
        return Err(Error::ShapeMismatch(format!("split {:?} does not sum to order {d}", s.parts())));
    }
    Ok(d)
}

fn generic_groups(groups: &[Vec<Vec<f64>>; 3], sizes: [usize; 3]) -> Result<bool> {
    for (cols, size) in groups.iter().zip(sizes) {
        check_columns(cols)?;
        let q = size.min(cols.len());
        if !subsets_independent(cols, q, largest_singular(cols)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(a,b,c)`-genericity of `sum_j t_j x_{1j} (x) ... (x) x_{dj}`: any
/// `min(m^p, r)` of the grouped vectors of each block of size `p` are
/// linearly independent.
pub fn is_abc_generic(terms: &[RankOneTerm], s: ModeSplit, m: usize) -> Result<bool> {
    check_terms(terms, s)?;
    let sizes = s.parts().map(|p| m.saturating_pow(p as u32));
    generic_groups(&grouped(terms, s), sizes)
}

/// `(a,b,c)`-genericity of `sum_j t_j u_j^{(x) d}`: any
/// `min(C(m+p-1, p), s)` of the powers `u_j^{(x) p}` of each block are
/// linearly independent.
pub fn is_abc_generic_symmetric(terms: &[SymRankOneTerm], s: ModeSplit, m: usize) -> Result<bool> {
    let dense = symmetric_as_terms(terms, s.total())?;
    check_terms(&dense, s)?;
    let sizes = s.parts().map(|p| linalg::binom((m + p - 1) as u64, p as u64) as usize);
    generic_groups(&grouped(&dense, s), sizes)
}

fn symmetric_as_terms(terms: &[SymRankOneTerm], d: usize) -> Result<Vec<RankOneTerm>> {
    if terms.is_empty() {
        return invalid("no terms");
    }
    Ok(terms.iter().map(|t| t.to_rank_one(d)).collect())
}

fn with_bound(mut cert: KruskalCertificate, generic: bool, bound: Rational) -> KruskalCertificate {
    let within = Rational::from_integer(cert.r as i64) <= bound;
    cert.generic = Some(generic);
    cert.bound = Some(fraction_string(&bound));
    cert.bound_value = Some(rational_value(&bound));
    cert.within_bound = Some(within);
    cert.verdict = if !within {
        "bound exceeded"
    } else if !generic {
        "not generic"
    } else if !cert.condition_met {
        "kruskal condition fails"
    } else {
        "certified"
    }
    .to_string();
    cert
}

/// Certificate that `sum_j t_j u_j^{(x) d}` with `t_j = +-1` has rank and
/// symmetric rank equal to the number of terms, using the split
/// `(1, floor((d-1)/2), ceil((d-1)/2))`.
pub fn certify_symmetric_rank(terms: &[SymRankOneTerm], m: usize, d: usize) -> Result<KruskalCertificate> {
    if terms.iter().any(|t| t.weight != 1.0 && t.weight != -1.0) {
        return invalid("symmetric rank certification needs weights +1 or -1");
    }
    if terms.iter().any(|t| t.factor.len() != m) {
        return Err(Error::ShapeMismatch(format!("factors must have length m={m}")));
    }
    let bound = n_bound(m, d)?;
    let s = ModeSplit::canonical(d)?;
    let generic = is_abc_generic_symmetric(terms, s, m)?;
    let dense = symmetric_as_terms(terms, d)?;
    let [y, z, w] = grouped(&dense, s);
    let cert = with_bound(certify(&FactorBundle::new(y, z, w)?)?, generic, bound);
    let ok = cert.verdict == "certified";
    Ok(KruskalCertificate { srank_certified: ok.then_some(cert.r), ..cert })
}

/// Certificate that a sum of order-`d` rank-one terms on `m`-dimensional
/// modes has rank equal to the number of terms, using the non-symmetric
/// bound and the same split.
pub fn certify_tensor_rank(terms: &[RankOneTerm], m: usize, d: usize) -> Result<KruskalCertificate> {
    if terms.iter().any(|t| t.order() != d || t.factors.iter().any(|f| f.len() != m)) {
        return Err(Error::ShapeMismatch(format!("terms must be order {d} with modes of size {m}")));
    }
    let bound = tensor_n_bound(m, d)?;
    let s = ModeSplit::canonical(d)?;
    let generic = is_abc_generic(terms, s, m)?;
    let [y, z, w] = grouped(terms, s);
    Ok(with_bound(certify(&FactorBundle::new(y, z, w)?)?, generic, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn e(i: usize, m: usize) -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        v
    }

    #[test]
    fn krank_examples() {
        assert_eq!(krank(&[e(0, 2), e(1, 2), vec![1.0, 1.0]]).unwrap(), 2);
        assert_eq!(krank(&[e(0, 2), e(0, 2)]).unwrap(), 1);
        let mut r = rng::seeded(5);
        let g: Vec<Vec<f64>> = (0..3).map(|_| rng::gaussian_vec(&mut r, 4)).collect();
        assert_eq!(krank(&g).unwrap(), 3);
        assert!(krank(&[e(0, 2), vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn certify_examples() {
        let id = vec![e(0, 2), e(1, 2)];
        let c = certify(&FactorBundle::new(id.clone(), id.clone(), id.clone()).unwrap()).unwrap();
        assert_eq!(c.kappas, [2, 2, 2]);
        assert!(c.condition_met && c.uniqueness_certified);
        assert_eq!(c.rank_certified, Some(2));

        let one = certify(&FactorBundle::new(vec![e(0, 2)], vec![e(1, 2)], vec![e(0, 2)]).unwrap()).unwrap();
        assert_eq!(one.kappas, [1, 1, 1]);
        assert!(!one.condition_met);

        let mut r = rng::seeded(2);
        let g = |r: &mut rng::Rng| (0..2).map(|_| rng::gaussian_vec(r, 2)).collect::<Vec<_>>();
        let (z, w) = (g(&mut r), g(&mut r));
        let c = certify(&FactorBundle::new(vec![e(0, 2), e(0, 2)], z, w).unwrap()).unwrap();
        assert_eq!(c.kappas, [1, 2, 2]);
        assert_eq!(c.rank_certified, None);
    }

    #[test]
    fn n_bound_table() {
        assert_eq!(n_bound(2, 3).unwrap(), Rational::from_integer(2));
        assert_eq!(n_bound(3, 3).unwrap(), Rational::new(7, 2));
        assert_eq!(n_bound(3, 4).unwrap(), Rational::from_integer(4));
        assert!(n_bound(2, 2).is_err());
        assert_eq!(fraction_string(&n_bound(3, 3).unwrap()), "7/2");
        assert_eq!(tensor_n_bound(2, 3).unwrap(), Rational::from_integer(2));
        assert_eq!(tensor_n_bound(3, 5).unwrap(), Rational::new(19, 2));
    }

    #[test]
    fn genericity_examples() {
        let s = ModeSplit::new(1, 1, 1).unwrap();
        let diag = [SymRankOneTerm::new(1.0, e(0, 2)).unwrap(), SymRankOneTerm::new(1.0, e(1, 2)).unwrap()];
        assert!(is_abc_generic_symmetric(&diag, s, 2).unwrap());
        let same = [SymRankOneTerm::new(1.0, e(0, 2)).unwrap(), SymRankOneTerm::new(1.0, e(0, 2)).unwrap()];
        assert!(!is_abc_generic_symmetric(&same, s, 2).unwrap());

        let mut r = rng::seeded(9);
        let g: Vec<SymRankOneTerm> =
            (0..3).map(|_| SymRankOneTerm::new(1.0, rng::gaussian_vec(&mut r, 2)).unwrap()).collect();
        assert!(is_abc_generic_symmetric(&g, ModeSplit::new(1, 2, 2).unwrap(), 2).unwrap());
    }

    #[test]
    fn symmetric_rank_certificates() {
        let diag = [SymRankOneTerm::new(1.0, e(0, 2)).unwrap(), SymRankOneTerm::new(1.0, e(1, 2)).unwrap()];
        let c = certify_symmetric_rank(&diag, 2, 3).unwrap();
        assert_eq!(c.verdict, "certified");
        assert_eq!(c.srank_certified, Some(2));
        assert_eq!(c.bound.as_deref(), Some("2/1"));

        let three = [
            SymRankOneTerm::new(1.0, e(0, 2)).unwrap(),
            SymRankOneTerm::new(1.0, e(1, 2)).unwrap(),
            SymRankOneTerm::new(1.0, vec![1.0, 1.0]).unwrap(),
        ];
        let c = certify_symmetric_rank(&three, 2, 3).unwrap();
        assert_eq!(c.verdict, "bound exceeded");
        assert_eq!(c.srank_certified, None);

        let mut r = rng::seeded(11);
        let g: Vec<SymRankOneTerm> =
            (0..4).map(|_| SymRankOneTerm::new(1.0, rng::gaussian_vec(&mut r, 3)).unwrap()).collect();
        let c = certify_symmetric_rank(&g, 3, 4).unwrap();
        assert_eq!(c.verdict, "certified", "{c:?}");
        assert_eq!(c.rank_certified, Some(4));

        let bad = [SymRankOneTerm::new(2.0, e(0, 2)).unwrap()];
        assert!(certify_symmetric_rank(&bad, 2, 3).is_err());
    }

    #[test]
    fn kron_order() {
        assert_eq!(kron(&[&[1.0, 2.0], &[3.0, 4.0]]), vec![3.0, 4.0, 6.0, 8.0]);
    }
}
