//! C ABI over `edcrit`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`-style
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`EdcritStatus`]; on failure the message is available from
//! [`edcrit_last_error`] on the same thread until the next failing call.
//! Strings returned through out-pointers are owned by the caller and must
//! be released with [`edcrit_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use edcrit::approx::{self, CPModel};
use edcrit::tensor::DenseTensor;
use edcrit::variety::{self, CriticalReport, VarietySpec};
use edcrit::{gf, kruskal, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdcritStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ShapeMismatch = 3,
    OffVariety = 4,
    SingularPoint = 5,
    NotConverged = 6,
    SearchTooLarge = 7,
    OutsideCertifiedRegime = 8,
    CompositeModulus = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

pub struct EdcritVariety {
    inner: VarietySpec,
}

pub struct EdcritReport {
    inner: CriticalReport,
}

pub struct EdcritTensor {
    inner: DenseTensor,
}

pub struct EdcritModel {
    inner: CPModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EdcritStatus {
    match e {
        Error::ShapeMismatch(_) => EdcritStatus::ShapeMismatch,
        Error::OffVariety { .. } => EdcritStatus::OffVariety,
        Error::SingularPoint { .. } => EdcritStatus::SingularPoint,
        Error::NoCriticalPoint | Error::NotConverged { .. } => EdcritStatus::NotConverged,
        Error::SearchTooLarge(_) => EdcritStatus::SearchTooLarge,
        Error::OutsideCertifiedRegime(_) => EdcritStatus::OutsideCertifiedRegime,
        Error::CompositeModulus(_) => EdcritStatus::CompositeModulus,
        _ => EdcritStatus::InvalidInput,
    }
}

struct Fail(EdcritStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EdcritStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EdcritStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EdcritStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EdcritStatus::Panic
        }
    }
}

unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("json has no nul bytes").into_raw()
}

/// Message of the last failing call on this thread, or NULL. Owned by the
/// library.
#[no_mangle]
pub extern "C" fn edcrit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn edcrit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn edcrit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Variety from its JSON description, e.g.
/// `{"type":"matrix_rank_at_most","p":3,"q":3,"k":1}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_variety_from_json(json: *const c_char, out: *mut *mut EdcritVariety) -> EdcritStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| Fail(EdcritStatus::InvalidInput, "json is not utf-8".into()))?;
        let inner: VarietySpec = serde_json::from_str(text).map_err(Error::from)?;
        put_box(out, EdcritVariety { inner })
    })
}

/// `p x q` matrices of rank at most `k`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_variety_matrix_rank(
    p: usize,
    q: usize,
    k: usize,
    out: *mut *mut EdcritVariety,
) -> EdcritStatus {
    guard(|| put_box(out, EdcritVariety { inner: VarietySpec::matrix_rank(p, q, k)? }))
}

/// `{ y : sum a_i y_i^2 = 0 }`.
///
/// # Safety
/// `coeffs` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_variety_quadric_cone(
    coeffs: *const f64,
    len: usize,
    out: *mut *mut EdcritVariety,
) -> EdcritStatus {
    guard(|| {
        let a = slice_arg(coeffs, len, "coeffs")?;
        put_box(out, EdcritVariety { inner: VarietySpec::quadric_cone(a)? })
    })
}

/// Rank-one tensors of the given shape.
///
/// # Safety
/// `shape` must point to `order` sizes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_variety_tensor_rank_one(
    shape: *const usize,
    order: usize,
    out: *mut *mut EdcritVariety,
) -> EdcritStatus {
    guard(|| {
        let s = slice_arg(shape, order, "shape")?;
        put_box(out, EdcritVariety { inner: VarietySpec::tensor_rank_one(s)? })
    })
}

/// # Safety
/// `v` must be NULL or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn edcrit_variety_free(v: *mut EdcritVariety) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Dimension of the ambient space of `v`.
///
/// # Safety
/// `v` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_variety_ambient_dim(v: *const EdcritVariety, out: *mut usize) -> EdcritStatus {
    guard(|| put(out, handle(v, "variety")?.inner.ambient_dim()))
}

/// Critical points of the distance from `x` to `v`.
///
/// # Safety
/// `v` must be a live handle, `x` must point to `len` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_critical_set(
    v: *const EdcritVariety,
    x: *const f64,
    len: usize,
    starts: usize,
    seed: u64,
    out: *mut *mut EdcritReport,
) -> EdcritStatus {
    guard(|| {
        let v = handle(v, "variety")?;
        let x = slice_arg(x, len, "x")?;
        let inner = variety::critical_set(&v.inner, x, starts, seed)?;
        put_box(out, EdcritReport { inner })
    })
}

/// Number of critical points on the smooth locus.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_report_point_count(r: *const EdcritReport, out: *mut usize) -> EdcritStatus {
    guard(|| put(out, handle(r, "report")?.inner.points.len()))
}

/// Number of critical points on proper singular strata.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_report_singular_count(r: *const EdcritReport, out: *mut usize) -> EdcritStatus {
    guard(|| put(out, handle(r, "report")?.inner.singular_points.len()))
}

/// Distance from the query to the variety.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_report_best_distance(r: *const EdcritReport, out: *mut f64) -> EdcritStatus {
    guard(|| put(out, handle(r, "report")?.inner.best_distance()))
}

/// Copies the nearest critical point into `buf`; fails with
/// `BufferTooSmall` (and writes the needed length to `written`) when `len`
/// is too small.
///
/// # Safety
/// `r` must be a live handle, `buf` must hold `len` doubles and `written`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_report_best_point(
    r: *const EdcritReport,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> EdcritStatus {
    guard(|| {
        let y = &handle(r, "report")?.inner.best.y;
        put(written, y.len())?;
        if len < y.len() {
            return Err(Fail(EdcritStatus::BufferTooSmall, format!("need {} doubles, got {len}", y.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(y.as_ptr(), buf, y.len());
        Ok(())
    })
}

/// Full report as JSON; free with [`edcrit_string_free`].
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_report_to_json(r: *const EdcritReport, out: *mut *mut c_char) -> EdcritStatus {
    guard(|| {
        let s = serde_json::to_string(&handle(r, "report")?.inner).map_err(Error::from)?;
        put(out, to_c_string(s))
    })
}

/// # Safety
/// `r` must be NULL or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn edcrit_report_free(r: *mut EdcritReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Dense tensor with row-major `data`.
///
/// # Safety
/// `shape` must point to `order` sizes, `data` to `len` doubles, and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_tensor_new(
    shape: *const usize,
    order: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut EdcritTensor,
) -> EdcritStatus {
    guard(|| {
        let shape = slice_arg(shape, order, "shape")?.to_vec();
        let data = slice_arg(data, len, "data")?.to_vec();
        put_box(out, EdcritTensor { inner: DenseTensor::new(shape, data)? })
    })
}

/// # Safety
/// `t` must be NULL or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn edcrit_tensor_free(t: *mut EdcritTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Best rank-`k` approximation found from `starts` seeded starts.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_best_rank_k(
    t: *const EdcritTensor,
    k: usize,
    starts: usize,
    seed: u64,
    out: *mut *mut EdcritModel,
) -> EdcritStatus {
    guard(|| {
        let t = &handle(t, "tensor")?.inner;
        let inner = if k == 1 { approx::best_rank1(t, starts, seed)? } else { approx::best_rank_k(t, k, starts, seed)? };
        put_box(out, EdcritModel { inner })
    })
}

/// `||T - model||`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_model_objective(m: *const EdcritModel, out: *mut f64) -> EdcritStatus {
    guard(|| put(out, handle(m, "model")?.inner.objective))
}

/// 1 when every term has collinear factors, else 0.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_model_is_symmetric(m: *const EdcritModel, out: *mut i32) -> EdcritStatus {
    guard(|| put(out, i32::from(approx::symmetry_verdict(&handle(m, "model")?.inner).is_symmetric)))
}

/// Model as JSON; free with [`edcrit_string_free`].
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_model_to_json(m: *const EdcritModel, out: *mut *mut c_char) -> EdcritStatus {
    guard(|| {
        let s = serde_json::to_string(&handle(m, "model")?.inner).map_err(Error::from)?;
        put(out, to_c_string(s))
    })
}

/// # Safety
/// `m` must be NULL or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn edcrit_model_free(m: *mut EdcritModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Kruskal rank of the `rows x cols` matrix stored column-major.
///
/// # Safety
/// `data` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_krank(data: *const f64, rows: usize, cols: usize, out: *mut usize) -> EdcritStatus {
    guard(|| {
        let len = rows.checked_mul(cols).ok_or_else(|| Fail(EdcritStatus::InvalidInput, "size overflow".into()))?;
        let a = slice_arg(data, len, "data")?;
        let columns: Vec<Vec<f64>> = a.chunks(rows.max(1)).map(<[f64]>::to_vec).collect();
        put(out, kruskal::krank(&columns)?)
    })
}

/// Term-count bound `N(m, d)` as the reduced fraction `num / den`.
///
/// # Safety
/// `num` and `den` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_n_bound(m: usize, d: usize, num: *mut i64, den: *mut i64) -> EdcritStatus {
    guard(|| {
        let b = kruskal::n_bound(m, d)?;
        put(num, *b.numer())?;
        put(den, *b.denom())
    })
}

/// Rank and symmetric rank of `e1 (x) e2 + e2 (x) e1` over GF(2).
///
/// # Safety
/// `rank` and `srank` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edcrit_gf_example64(rank: *mut usize, srank: *mut usize) -> EdcritStatus {
    guard(|| {
        let e = gf::example64()?;
        let missing = || Fail(EdcritStatus::NotConverged, "search bound too small".into());
        put(rank, e.rank.ok_or_else(missing)?)?;
        put(srank, e.srank.ok_or_else(missing)?)
    })
}
