//! C ABI over `gdesprit`.
//!
//! Objects cross the boundary as opaque handles created by `gd_*_new` /
//! `gd_*_parse` / `gd_esprit_*` and released with the matching `gd_*_free`.
//! Every fallible call returns a [`GdStatus`]; on failure the message is
//! available from [`gd_last_error_message`] on the same thread until the
//! next failing call. Panics are caught at the boundary and reported as
//! `GD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gdesprit::domains::{erode, IndexSet};
use gdesprit::esprit::{esprit_1d, esprit_nd, EspritOptions, EstimationReport, ModelOrder};
use gdesprit::grid::GridSpec;
use gdesprit::hankel::capacity;
use gdesprit::{c64, Error, MdSequence};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    NoValidDecomposition = 3,
    DegenerateFiber = 4,
    Coverage = 5,
    CapacityExceeded = 6,
    ModelOrder = 7,
    RankDeficient = 8,
    Multiplicity = 9,
    PairingFailure = 10,
    NonFinite = 11,
    Numeric = 12,
    Parse = 13,
    Io = 14,
    NullPointer = 15,
    OutOfRange = 16,
    Panic = 17,
}

impl From<&Error> for GdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => GdStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => GdStatus::DimensionMismatch,
            Error::NoValidDecomposition(_) => GdStatus::NoValidDecomposition,
            Error::DegenerateFiber { .. } => GdStatus::DegenerateFiber,
            Error::Coverage { .. } => GdStatus::Coverage,
            Error::CapacityExceeded { .. } => GdStatus::CapacityExceeded,
            Error::ModelOrder(_) => GdStatus::ModelOrder,
            Error::RankDeficient { .. } => GdStatus::RankDeficient,
            Error::Multiplicity { .. } => GdStatus::Multiplicity,
            Error::PairingFailure { .. } => GdStatus::PairingFailure,
            Error::NonFinite(_) => GdStatus::NonFinite,
            Error::Numeric(_) | Error::Generation(_) => GdStatus::Numeric,
            Error::Parse(_) | Error::Json(_) => GdStatus::Parse,
            Error::Io(_) => GdStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdComplex {
    pub re: f64,
    pub im: f64,
}

impl From<c64> for GdComplex {
    fn from(z: c64) -> Self {
        GdComplex { re: z.re, im: z.im }
    }
}

impl From<GdComplex> for c64 {
    fn from(z: GdComplex) -> Self {
        c64::new(z.re, z.im)
    }
}

/// Estimation settings. `model_order == 0` selects the order automatically
/// from `rel_tol`; `residual_tol <= 0` disables the pairing check.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GdOptions {
    pub model_order: usize,
    pub rel_tol: f64,
    pub combo_seed: u64,
    pub combo_retries: usize,
    pub residual_tol: f64,
}

pub struct GdIndexSet(IndexSet);
pub struct GdSamples(MdSequence);
pub struct GdReport(EstimationReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: GdStatus, msg: impl Into<String>) -> GdStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), GdStatus>) -> GdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GdStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(GdStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lift<T>(r: gdesprit::Result<T>) -> Result<T, GdStatus> {
    r.map_err(|e| fail(GdStatus::from(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, GdStatus> {
    p.as_ref().ok_or_else(|| fail(GdStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, GdStatus> {
    p.as_mut().ok_or_else(|| fail(GdStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], GdStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(GdStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn gd_options_default() -> GdOptions {
    GdOptions { model_order: 0, rel_tol: 1e-8, combo_seed: 0, combo_retries: 8, residual_tol: 1e-6 }
}

/// Parses a grid spec (`box:9,9`, `triangle:L`, `half_disc:R`,
/// `mask:FILE`, or JSON).
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_index_set_parse(spec: *const c_char, out: *mut *mut GdIndexSet) -> GdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if spec.is_null() {
            return Err(fail(GdStatus::NullPointer, "spec is null"));
        }
        let text = CStr::from_ptr(spec)
            .to_str()
            .map_err(|_| fail(GdStatus::Parse, "spec is not valid UTF-8"))?;
        let grid: GridSpec = lift(text.parse())?;
        *out = Box::into_raw(Box::new(GdIndexSet(lift(grid.to_index_set())?)));
        Ok(())
    })
}

/// Builds a set from `n_points` points of `dim` coordinates each, stored
/// point after point.
///
/// # Safety
/// `coords` must point to `dim * n_points` integers and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn gd_index_set_from_points(
    dim: usize,
    coords: *const i64,
    n_points: usize,
    out: *mut *mut GdIndexSet,
) -> GdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if dim == 0 {
            return Err(fail(GdStatus::InvalidArgument, "dim must be positive"));
        }
        let len = dim
            .checked_mul(n_points)
            .ok_or_else(|| fail(GdStatus::InvalidArgument, "point count overflows"))?;
        let flat = slice(coords, len, "coords")?;
        let set = lift(IndexSet::from_points(dim, flat.chunks_exact(dim)))?;
        *out = Box::into_raw(Box::new(GdIndexSet(set)));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gd_index_set_free(set: *mut GdIndexSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of points; 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_index_set_len(set: *const GdIndexSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_index_set_dim(set: *const GdIndexSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies point `i` (canonical order) into `out`, which holds `dim` values.
///
/// # Safety
/// `set` must be a live handle and `out` point to `dim` writable integers.
#[no_mangle]
pub unsafe extern "C" fn gd_index_set_point(set: *const GdIndexSet, i: usize, out: *mut i64) -> GdStatus {
    guard(|| {
        let set = &deref(set, "set")?.0;
        if i >= set.len() {
            return Err(fail(GdStatus::OutOfRange, format!("point {i} of {}", set.len())));
        }
        if out.is_null() {
            return Err(fail(GdStatus::NullPointer, "out is null"));
        }
        ptr::copy_nonoverlapping(set.point(i).as_ptr(), out, set.dim());
        Ok(())
    })
}

/// Largest model order the row domain supports.
///
/// # Safety
/// `xi` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gd_capacity(xi: *const GdIndexSet, out: *mut usize) -> GdStatus {
    guard(|| {
        let xi = &deref(xi, "xi")?.0;
        *out_ptr(out, "out")? = lift(capacity(xi))?;
        Ok(())
    })
}

/// Largest column domain with `xi + upsilon` inside `omega`.
///
/// # Safety
/// `omega`, `xi` must be live handles and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gd_erode(
    omega: *const GdIndexSet,
    xi: *const GdIndexSet,
    out: *mut *mut GdIndexSet,
) -> GdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let ups = lift(erode(&deref(omega, "omega")?.0, &deref(xi, "xi")?.0))?;
        *out = Box::into_raw(Box::new(GdIndexSet(ups)));
        Ok(())
    })
}

/// Samples on `domain`, one value per point in canonical order. The domain
/// is copied.
///
/// # Safety
/// `domain` must be a live handle, `values` point to `n` values, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gd_samples_new(
    domain: *const GdIndexSet,
    values: *const GdComplex,
    n: usize,
    out: *mut *mut GdSamples,
) -> GdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let domain = deref(domain, "domain")?.0.clone();
        let vals = slice(values, n, "values")?.iter().map(|&z| c64::from(z)).collect();
        *out = Box::into_raw(Box::new(GdSamples(lift(MdSequence::new(domain, vals))?)));
        Ok(())
    })
}

/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_samples_free(samples: *mut GdSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// 1D ESPRIT on `n` uniformly spaced samples; writes `k` frequencies `ζ`.
///
/// # Safety
/// `samples` must point to `n` values and `out_zeta` to `k` writable slots.
#[no_mangle]
pub unsafe extern "C" fn gd_esprit_1d(
    samples: *const GdComplex,
    n: usize,
    k: usize,
    out_zeta: *mut GdComplex,
) -> GdStatus {
    guard(|| {
        let f: Vec<c64> = slice(samples, n, "samples")?.iter().map(|&z| z.into()).collect();
        let zeta = lift(esprit_1d(&f, k))?;
        if out_zeta.is_null() {
            return Err(fail(GdStatus::NullPointer, "out_zeta is null"));
        }
        for (i, z) in zeta.into_iter().enumerate() {
            *out_zeta.add(i) = z.into();
        }
        Ok(())
    })
}

/// General-domain ESPRIT. `upsilon` may be null to use the erosion of the
/// sample domain by `xi`; `options` may be null for the defaults (automatic
/// order).
///
/// # Safety
/// Handles must be live, `options` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gd_esprit_nd(
    samples: *const GdSamples,
    xi: *const GdIndexSet,
    upsilon: *const GdIndexSet,
    options: *const GdOptions,
    out: *mut *mut GdReport,
) -> GdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let f = &deref(samples, "samples")?.0;
        let xi = &deref(xi, "xi")?.0;
        let o = options.as_ref().copied().unwrap_or_else(|| gd_options_default());
        let opts = EspritOptions {
            model_order: if o.model_order == 0 {
                ModelOrder::Auto { rel_tol: o.rel_tol }
            } else {
                ModelOrder::Fixed(o.model_order)
            },
            combo_seed: o.combo_seed,
            combo_retries: o.combo_retries,
            diag_residual_tol: (o.residual_tol > 0.0).then_some(o.residual_tol),
        };
        let report = match upsilon.as_ref() {
            Some(u) => lift(esprit_nd(f, xi, &u.0, &opts))?,
            None => lift(erode(&f.domain, xi).and_then(|u| esprit_nd(f, xi, &u, &opts)))?,
        };
        *out = Box::into_raw(Box::new(GdReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_report_free(report: *mut GdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Estimated model order; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_report_order(report: *const GdReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.order())
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_report_dim(report: *const GdReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.model.dim)
}

/// Writes `ζ_k` (dim values) and `c_k` of term `k`.
///
/// # Safety
/// `report` must be live, `zeta` point to `dim` slots and `coeff` be valid.
#[no_mangle]
pub unsafe extern "C" fn gd_report_term(
    report: *const GdReport,
    k: usize,
    zeta: *mut GdComplex,
    coeff: *mut GdComplex,
) -> GdStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        let t = r
            .model
            .terms
            .get(k)
            .ok_or_else(|| fail(GdStatus::OutOfRange, format!("term {k} of {}", r.order())))?;
        if zeta.is_null() {
            return Err(fail(GdStatus::NullPointer, "zeta is null"));
        }
        for (p, &z) in t.zeta.iter().enumerate() {
            *zeta.add(p) = z.into();
        }
        *out_ptr(coeff, "coeff")? = t.coeff.into();
        Ok(())
    })
}

/// Copies up to `cap` singular values into `out` and returns how many the
/// report holds.
///
/// # Safety
/// `report` must be null or live; `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn gd_report_singular_values(report: *const GdReport, out: *mut f64, cap: usize) -> usize {
    let Some(r) = report.as_ref() else { return 0 };
    let s = &r.0.singular_values;
    if !out.is_null() {
        ptr::copy_nonoverlapping(s.as_ptr(), out, s.len().min(cap));
    }
    s.len()
}

/// Largest relative off-diagonal residual of the joint diagonalization.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_report_max_pairing_residual(report: *const GdReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.max_pairing_residual())
}

/// The full report as JSON; release with [`gd_string_free`]. Null on
/// failure.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_report_to_json(report: *const GdReport) -> *mut c_char {
    let mut out = ptr::null_mut();
    let status = guard(|| {
        let r = &deref(report, "report")?.0;
        let text = lift(serde_json::to_string(r).map_err(Error::from))?;
        out = CString::new(text).map_err(|e| fail(GdStatus::Numeric, e.to_string()))?.into_raw();
        Ok(())
    });
    if status == GdStatus::Ok { out } else { ptr::null_mut() }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
