//! Command-line runner. Every command writes a JSON artifact
//! `{schema, command, config, result}`; experiments also write one CSV row
//! per trial. Exit codes: 0 success, 2 configuration error, 3 numeric
//! failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::approx::{self, symmetry_verdict};
use crate::error::{invalid, Error, Result};
use crate::gf::{self, GFTensor};
use crate::kruskal::{self, FactorBundle};
use crate::symdecomp::{self, format_q, parse_q, Q};
use crate::tensor::{symmetrize, DenseTensor, SymRankOneTerm};
use crate::variety::{self, VarietySpec};

pub const SCHEMA: &str = "edcrit/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "edcrit", version, about = "Euclidean distance critical points, rank certificates and tensor approximation")]
pub struct Cli {
    /// Worker threads (default: machine parallelism). Results do not
    /// depend on it.
    #[arg(long, global = true, env = "EDCRIT_THREADS")]
    pub threads: Option<usize>,
    /// JSON artifact path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV path for experiments; defaults to the JSON path with a `.csv`
    /// extension.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical points of the distance from a query to a variety.
    Critpoints(CritArgs),
    /// Best rank-k approximation of a tensor.
    Approx(ApproxArgs),
    /// Kruskal rank certificates and term-count bounds.
    #[command(subcommand)]
    Kruskal(KruskalCmd),
    /// Exact symmetric decompositions over the rationals.
    #[command(subcommand)]
    Decomp(DecompCmd),
    /// Ranks and witnesses over prime fields.
    #[command(subcommand)]
    Gf(GfCmd),
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarietyName {
    Subspace,
    QuadricCone,
    MatrixRank,
    TensorRankOne,
    TensorRank,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VarietyArgs {
    #[arg(long, value_enum)]
    pub variety: VarietyName,
    /// Subspace: ambient dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Subspace: number of basis columns.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// Subspace: n x r basis, row-major, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<f64>>,
    /// Quadric cone: coefficients a_i of sum a_i y_i^2 = 0.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// Rank bound.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Tensor shape, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
}

impl VarietyArgs {
    pub fn build(&self) -> Result<VarietySpec> {
        let need = |x: Option<usize>, name: &str| x.ok_or_else(|| Error::InvalidInput(format!("--{name} is required")));
        match self.variety {
            VarietyName::Subspace => {
                let basis = self.basis.clone().ok_or_else(|| Error::InvalidInput("--basis is required".into()))?;
                let r = need(self.r, "r")?;
                let n = self.n.unwrap_or(basis.len() / r.max(1));
                VarietySpec::new(variety::VarietyKind::Subspace { n, r, basis })
            }
            VarietyName::QuadricCone => {
                let coeffs = self.coeffs.as_ref().ok_or_else(|| Error::InvalidInput("--coeffs is required".into()))?;
                VarietySpec::quadric_cone(coeffs)
            }
            VarietyName::MatrixRank => VarietySpec::matrix_rank(need(self.p, "p")?, need(self.q, "q")?, need(self.k, "k")?),
            VarietyName::TensorRankOne => VarietySpec::tensor_rank_one(&self.shape_arg()?),
            VarietyName::TensorRank => VarietySpec::tensor_rank(&self.shape_arg()?, need(self.k, "k")?),
        }
    }

    fn shape_arg(&self) -> Result<Vec<usize>> {
        self.shape.clone().ok_or_else(|| Error::InvalidInput("--shape is required".into()))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CritArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub variety: VarietyArgs,
    /// `diag:a,b,...`, `vec:x1,x2,...` or `file:path.json`.
    #[arg(long, allow_hyphen_values = true)]
    pub query: String,
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ApproxArgs {
    /// `diag:a,b,...` (order from --order) or `file:path.json`.
    #[arg(long, allow_hyphen_values = true)]
    pub tensor: String,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Restrict to symmetric rank-one models (needs a symmetric tensor
    /// and k = 1).
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long, default_value_t = 50)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum KruskalCmd {
    /// Certificate for `sum_j y_j (x) z_j (x) w_j` (JSON `{y, z, w}`).
    Certify(CertifyArgs),
    /// Certificate for `sum_j t_j u_j^{(x) d}` (JSON list of
    /// `{weight, factor}`).
    Symmetric(SymCertifyArgs),
    /// Term-count bounds N(m, d).
    Bound(BoundArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CertifyArgs {
    /// `file:path.json`.
    #[arg(long)]
    pub factors: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SymCertifyArgs {
    /// `file:path.json`.
    #[arg(long)]
    pub terms: String,
    #[arg(long)]
    pub d: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub d: usize,
}

#[derive(Debug, Subcommand)]
pub enum DecompCmd {
    /// `S_{k,d-k}(u, v)` as a combination of d-th powers.
    Mixed(MixedArgs),
    /// Integer vectors whose d-th powers form a basis of S(m, d).
    Basis(BoundArgs),
    /// dim S(m, d).
    Dim(BoundArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MixedArgs {
    /// Rational entries (`p/q` or integers), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub u: Vec<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v: Vec<String>,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub d: usize,
    /// d distinct rational nodes; default 0, 1, ..., d-1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum GfCmd {
    /// e1 (x) e2 + e2 (x) e1 over GF(2): rank and symmetric rank.
    Example64,
    /// Rank and (for symmetric input) symmetric rank by exhaustive search.
    Rank(GfRankArgs),
    /// Rank of a matrix over GF(p).
    MatrixRank(GfMatrixArgs),
    /// Symmetric tensor outside the span of rank-one symmetric tensors.
    Witness(GfWitnessArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GfRankArgs {
    /// `file:path.json` holding `{p, shape, entries}`.
    #[arg(long)]
    pub tensor: String,
    #[arg(long, default_value_t = gf::MAX_SEARCH_TERMS)]
    pub max_terms: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GfMatrixArgs {
    #[arg(long)]
    pub p: u64,
    /// Rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub rows: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GfWitnessArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub d: usize,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCmd {
    /// Symmetry and uniqueness of best rank-one approximations.
    Thm71(Thm71Args),
    /// Symmetry of best rank-k approximations near certified tensors.
    Thm72(Thm72Args),
    /// Lipschitz ratios of the distance function.
    Lipschitz(ProbeArgs),
    /// Uniqueness gaps of nearest critical points.
    Uniqueness(ProbeArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Thm71Args {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 50)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Thm72Args {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub noise: f64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 50)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub variety: VarietyArgs,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Result of one command: the JSON artifact, optional CSV table, and the
/// one-line summary.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub json: Value,
    pub csv: Option<String>,
    pub summary: String,
}

fn read_file_literal(lit: &str) -> Result<String> {
    let path = lit.strip_prefix("file:").ok_or_else(|| Error::InvalidInput(format!("expected file:path, got {lit:?}")))?;
    Ok(fs::read_to_string(path)?)
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number {t:?}"))))
        .collect()
}

/// Point of the variety's ambient space from a command-line literal.
pub fn parse_point(lit: &str, v: &VarietySpec) -> Result<Vec<f64>> {
    if let Some(rest) = lit.strip_prefix("vec:") {
        return parse_list(rest);
    }
    if let Some(rest) = lit.strip_prefix("diag:") {
        let diag = parse_list(rest)?;
        return match v.kind() {
            variety::VarietyKind::MatrixRankAtMost { p, q, .. } => {
                if diag.len() > (*p).min(*q) {
                    return Err(Error::ShapeMismatch(format!("{} diagonal entries for a {p}x{q} matrix", diag.len())));
                }
                let mut x = vec![0.0; p * q];
                for (i, a) in diag.iter().enumerate() {
                    x[i * q + i] = *a;
                }
                Ok(x)
            }
            variety::VarietyKind::TensorRankOne { shape } | variety::VarietyKind::TensorRankAtMost { shape, .. } => {
                let t = DenseTensor::diagonal(shape.len(), &diag);
                if t.shape() != shape.as_slice() {
                    return Err(Error::ShapeMismatch(format!("diagonal tensor {:?} does not match {shape:?}", t.shape())));
                }
                Ok(t.into_data())
            }
            _ => invalid("diag: literals need a matrix or tensor variety; use vec: or file:"),
        };
    }
    let text = read_file_literal(lit)?;
    let value: Value = serde_json::from_str(&text)?;
    if value.is_array() {
        Ok(serde_json::from_value(value)?)
    } else {
        let t: DenseTensor = serde_json::from_value(value)?;
        Ok(t.into_data())
    }
}

/// Tensor from `diag:...` (with the given order) or `file:path.json`.
pub fn parse_tensor(lit: &str, order: usize) -> Result<DenseTensor> {
    if let Some(rest) = lit.strip_prefix("diag:") {
        if order < 1 {
            return invalid("--order must be >= 1");
        }
        let diag = parse_list(rest)?;
        if diag.is_empty() {
            return invalid("diag: needs at least one entry");
        }
        return Ok(DenseTensor::diagonal(order, &diag));
    }
    Ok(serde_json::from_str(&read_file_literal(lit)?)?)
}

fn parse_rationals(xs: &[String]) -> Result<Vec<Q>> {
    xs.iter().map(|s| parse_q(s)).collect()
}

fn envelope(command: &str, config: &impl Serialize, result: &impl Serialize) -> Result<Value> {
    Ok(json!({
        "schema": SCHEMA,
        "command": command,
        "config": serde_json::to_value(config)?,
        "result": serde_json::to_value(result)?,
    }))
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), |g| format!("{g:.3e}"))
}

fn critpoints(a: &CritArgs) -> Result<Artifact> {
    let v = a.variety.build()?;
    let x = parse_point(&a.query, &v)?;
    let report = variety::critical_set(&v, &x, a.starts, a.seed)?;
    let summary = format!(
        "critpoints: {} smooth + {} singular critical points, best distance {:.6}, gap {}",
        report.points.len(),
        report.singular_points.len(),
        report.best_distance(),
        opt(report.uniqueness_gap)
    );
    Ok(Artifact { json: envelope("critpoints", a, &report)?, csv: None, summary })
}

fn approx_cmd(a: &ApproxArgs) -> Result<Artifact> {
    let t = parse_tensor(&a.tensor, a.order)?;
    if a.symmetric {
        if a.k != 1 {
            return invalid("--symmetric needs --k 1");
        }
        if !t.is_symmetric(1e-12 * t.norm().max(1.0)) {
            return invalid("--symmetric needs a symmetric tensor");
        }
        let model = approx::best_rank1_symmetric(&symmetrize(&t)?, a.starts, a.seed)?;
        let summary = format!("approx: symmetric rank-1 objective {:.6e}", model.objective);
        let result = json!({ "model": model, "symmetry": symmetry_verdict(&model) });
        return Ok(Artifact { json: envelope("approx", a, &result)?, csv: None, summary });
    }
    if a.k == 1 {
        let search = approx::rank1_search(&t, a.starts, a.seed)?;
        let verdict = symmetry_verdict(&search.best);
        let summary = format!(
            "approx: rank-1 objective {:.6e}, symmetric {}, gap {}",
            search.best.objective,
            verdict.is_symmetric,
            opt(search.gap)
        );
        let result = json!({
            "model": search.best,
            "symmetry": verdict,
            "distinct_objectives": search.distinct_objectives,
            "gap": search.gap,
        });
        return Ok(Artifact { json: envelope("approx", a, &result)?, csv: None, summary });
    }
    let model = approx::best_rank_k(&t, a.k, a.starts, a.seed)?;
    let verdict = symmetry_verdict(&model);
    let summary = format!(
        "approx: rank-{} objective {:.6e}, symmetric {}, border-rank escape {}",
        a.k, model.objective, verdict.is_symmetric, model.border_rank_escape
    );
    let result = json!({ "model": model, "symmetry": verdict });
    Ok(Artifact { json: envelope("approx", a, &result)?, csv: None, summary })
}

fn kruskal_cmd(c: &KruskalCmd) -> Result<Artifact> {
    let cert_summary = |c: &kruskal::KruskalCertificate| {
        format!("kruskal: kappas {:?}, r {}, verdict {}", c.kappas, c.r, c.verdict)
    };
    match c {
        KruskalCmd::Certify(a) => {
            let f: FactorBundle = serde_json::from_str(&read_file_literal(&a.factors)?)?;
            let f = FactorBundle::new(f.y, f.z, f.w)?;
            let cert = kruskal::certify(&f)?;
            Ok(Artifact { summary: cert_summary(&cert), json: envelope("kruskal certify", a, &cert)?, csv: None })
        }
        KruskalCmd::Symmetric(a) => {
            let terms: Vec<SymRankOneTerm> = serde_json::from_str(&read_file_literal(&a.terms)?)?;
            let terms = terms.into_iter().map(|t| SymRankOneTerm::new(t.weight, t.factor)).collect::<Result<Vec<_>>>()?;
            let m = terms.first().map_or(0, |t| t.factor.len());
            let cert = kruskal::certify_symmetric_rank(&terms, m, a.d)?;
            Ok(Artifact { summary: cert_summary(&cert), json: envelope("kruskal symmetric", a, &cert)?, csv: None })
        }
        KruskalCmd::Bound(a) => {
            let n = kruskal::n_bound(a.m, a.d)?;
            let nt = kruskal::tensor_n_bound(a.m, a.d)?;
            let fmt = |r: &kruskal::Rational| format!("{}/{}", r.numer(), r.denom());
            let result = json!({
                "n_bound": fmt(&n),
                "n_bound_value": kruskal::rational_value(&n),
                "tensor_n_bound": fmt(&nt),
                "tensor_n_bound_value": kruskal::rational_value(&nt),
            });
            let summary = format!("kruskal: N({}, {}) = {}", a.m, a.d, fmt(&n));
            Ok(Artifact { json: envelope("kruskal bound", a, &result)?, csv: None, summary })
        }
    }
}

fn decomp_cmd(c: &DecompCmd) -> Result<Artifact> {
    match c {
        DecompCmd::Mixed(a) => {
            let (u, v) = (parse_rationals(&a.u)?, parse_rationals(&a.v)?);
            let nodes = match &a.nodes {
                Some(n) => parse_rationals(n)?,
                None => symdecomp::default_nodes(a.d),
            };
            let comb = symdecomp::vandermonde_decompose(&u, &v, a.k, a.d, &nodes)?;
            let target = symdecomp::mixed_power(&u, &v, a.k, a.d)?;
            let verified = comb.densify() == target;
            let result = json!({
                "combination": comb,
                "mixed_power": target.coeffs().iter().map(format_q).collect::<Vec<_>>(),
                "verified": verified,
            });
            let summary = format!("decomp: {} terms, exact expansion verified {verified}", comb.terms.len());
            Ok(Artifact { json: envelope("decomp mixed", a, &result)?, csv: None, summary })
        }
        DecompCmd::Basis(a) => {
            let b = symdecomp::power_basis(a.m, a.d)?;
            let summary = format!("decomp: {} basis vectors, determinant {}", b.vectors.len(), format_q(&b.determinant));
            Ok(Artifact { json: envelope("decomp basis", a, &b)?, csv: None, summary })
        }
        DecompCmd::Dim(a) => {
            if a.m < 1 || a.d < 1 {
                return invalid("m and d must be >= 1");
            }
            let n = symdecomp::sym_dim(a.m, a.d);
            let summary = format!("decomp: dim S({}, {}) = {n}", a.m, a.d);
            Ok(Artifact { json: envelope("decomp dim", a, &json!({ "dim": n }))?, csv: None, summary })
        }
    }
}

fn gf_cmd(c: &GfCmd) -> Result<Artifact> {
    match c {
        GfCmd::Example64 => {
            let e = gf::example64()?;
            let summary = format!("gf: rank {:?}, srank {:?}", e.rank, e.srank);
            Ok(Artifact { json: envelope("gf example64", &json!({}), &e)?, csv: None, summary })
        }
        GfCmd::Rank(a) => {
            let t: GFTensor = serde_json::from_str(&read_file_literal(&a.tensor)?)?;
            t.validate()?;
            let rank = gf::rank_exhaustive(&t, a.max_terms)?;
            let srank = if t.is_symmetric() { gf::srank_exhaustive(&t, a.max_terms)? } else { None };
            let summary = format!("gf: rank {rank:?}, srank {srank:?}");
            let result = json!({ "rank": rank, "srank": srank, "symmetric": t.is_symmetric() });
            Ok(Artifact { json: envelope("gf rank", a, &result)?, csv: None, summary })
        }
        GfCmd::MatrixRank(a) => {
            let rows = a
                .rows
                .split(';')
                .map(|r| {
                    r.split(',')
                        .map(|x| x.trim().parse::<i64>().map(|v| v.rem_euclid(a.p.max(1) as i64) as u64))
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::InvalidInput(format!("bad matrix row {r:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let rank = gf::gf_rank(&rows, a.p)?;
            Ok(Artifact {
                json: envelope("gf matrix-rank", a, &json!({ "rank": rank }))?,
                csv: None,
                summary: format!("gf: rank {rank}"),
            })
        }
        GfCmd::Witness(a) => {
            let r = gf::prop61_witness(a.p, a.m, a.d)?;
            let summary = format!(
                "gf: dim S = {}, lines = {}, span dim = {}, witness {}",
                r.sym_dim,
                r.lines,
                r.span_dim,
                if r.witness.is_some() { "found" } else { "absent" }
            );
            Ok(Artifact { json: envelope("gf witness", a, &r)?, csv: None, summary })
        }
    }
}

#[derive(Serialize)]
struct LipschitzRow {
    trial: usize,
    seed: u64,
    ratio: f64,
}

fn experiment_cmd(c: &ExperimentCmd) -> Result<Artifact> {
    match c {
        ExperimentCmd::Thm71(a) => {
            let s = approx::experiment_thm71(a.m, a.d, a.trials, a.starts, a.seed)?;
            let summary = format!(
                "thm71: m={} d={} trials={} symmetric {:.4} unique {:.4}",
                s.m, s.d, s.trials, s.fraction_symmetric, s.fraction_unique
            );
            Ok(Artifact { csv: Some(to_csv(&s.rows)?), json: envelope("experiment thm71", a, &s)?, summary })
        }
        ExperimentCmd::Thm72(a) => {
            let s = approx::experiment_thm72(a.m, a.d, a.k, a.noise, a.trials, a.starts, a.seed)?;
            let summary = format!(
                "thm72: m={} d={} k={} noise={:e} symmetric {:.4} recovered {:.4} escapes {}",
                s.m, s.d, s.k, s.noise, s.fraction_symmetric, s.fraction_recovered, s.escapes
            );
            Ok(Artifact { csv: Some(to_csv(&s.rows)?), json: envelope("experiment thm72", a, &s)?, summary })
        }
        ExperimentCmd::Lipschitz(a) => {
            let v = a.variety.build()?;
            let r = variety::lipschitz_probe(&v, a.trials, a.seed)?;
            let rows: Vec<LipschitzRow> = r
                .ratios
                .iter()
                .enumerate()
                .map(|(trial, &ratio)| LipschitzRow { trial, seed: crate::rng::trial_seed(a.seed, trial), ratio })
                .collect();
            let summary = format!("lipschitz: {} pairs, max ratio {:.9}", r.trials, r.max_ratio);
            Ok(Artifact { csv: Some(to_csv(&rows)?), json: envelope("experiment lipschitz", a, &r)?, summary })
        }
        ExperimentCmd::Uniqueness(a) => {
            let v = a.variety.build()?;
            let r = variety::uniqueness_probe(&v, a.trials, a.seed)?;
            let summary = format!(
                "uniqueness: {} queries, {} excluded, unique {:.4}, min gap {}",
                r.trials,
                r.excluded,
                r.fraction_unique,
                opt(r.min_gap)
            );
            Ok(Artifact { csv: Some(to_csv(&r.rows)?), json: envelope("experiment uniqueness", a, &r)?, summary })
        }
    }
}

/// Runs one command without touching the filesystem for output.
pub fn execute(command: &Command) -> Result<Artifact> {
    match command {
        Command::Critpoints(a) => critpoints(a),
        Command::Approx(a) => approx_cmd(a),
        Command::Kruskal(c) => kruskal_cmd(c),
        Command::Decomp(c) => decomp_cmd(c),
        Command::Gf(c) => gf_cmd(c),
        Command::Experiment(c) => experiment_cmd(c),
    }
}

fn write_outputs(cli: &Cli, art: &Artifact) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&art.json)?;
    text.push('\n');
    match &cli.out {
        Some(path) => {
            fs::write(path, &text)?;
            if let Some(csv) = &art.csv {
                let csv_path = cli.csv.clone().unwrap_or_else(|| csv_path_for(path));
                fs::write(csv_path, csv)?;
            }
            println!("{}", art.summary);
        }
        None => {
            if let (Some(csv), Some(p)) = (&art.csv, &cli.csv) {
                fs::write(p, csv)?;
            }
            std::io::stdout().write_all(text.as_bytes())?;
            eprintln!("{}", art.summary);
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    if e.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

/// Runs the parsed command on a pool of `cli.threads` workers and writes
/// its artifacts. Returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: invalid input: --threads must be >= 1");
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NUMERIC;
        }
    };
    let outcome = pool.install(|| execute(&cli.command)).and_then(|art| write_outputs(cli, &art));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    run(&cli)
}

/// Path with the `.csv` extension next to a JSON artifact.
pub fn csv_path_for(json: &Path) -> PathBuf {
    json.with_extension("csv")
}
