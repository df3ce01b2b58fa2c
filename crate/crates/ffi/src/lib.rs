//! C ABI over the `geoecon` crate.
//!
//! Every fallible function returns one of the `GEOECON_*` status codes and
//! writes its result through an out-pointer. On failure a description is
//! available from [`geoecon_last_error`] on the same thread. Handles and
//! strings returned by this library must be released with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use geoecon::{analyze, find_ssset, ComplexityReport, Error, SpecializationMatrix};

pub const GEOECON_OK: i32 = 0;
/// A required pointer argument was null.
pub const GEOECON_ERR_NULL_POINTER: i32 = 1;
/// Arguments were inconsistent (bad dimensions, non-binary cell, bad label).
pub const GEOECON_ERR_INVALID_ARGUMENT: i32 = 2;
/// The indices could not be computed (degenerate spectrum, too little data).
pub const GEOECON_ERR_COMPUTATION: i32 = 3;
/// The requested entry exists but has no value (e.g. a country with no
/// specialization has no GCI).
pub const GEOECON_ERR_NO_VALUE: i32 = 4;
/// Index out of range.
pub const GEOECON_ERR_OUT_OF_RANGE: i32 = 5;
/// A Rust panic was caught at the boundary.
pub const GEOECON_ERR_PANIC: i32 = 6;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn fail(code: i32, message: impl Into<String>) -> i32 {
    set_error(message);
    code
}

fn from_error(e: &Error) -> i32 {
    let code = if e.exit_code() == 2 {
        GEOECON_ERR_INVALID_ARGUMENT
    } else {
        GEOECON_ERR_COMPUTATION
    };
    fail(code, e.to_string())
}

fn guard(f: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => fail(GEOECON_ERR_PANIC, "internal panic"),
    }
}

/// Binary country × domain specialization matrix.
pub struct GeoeconMatrix {
    inner: SpecializationMatrix,
}

/// Diversity, ubiquity, ETGCI, GCI and ranks computed from a matrix.
pub struct GeoeconReport {
    inner: ComplexityReport,
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn geoecon_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

unsafe fn read_labels(
    labels: *const *const c_char,
    count: usize,
    prefix: &str,
) -> Result<Vec<String>, String> {
    if labels.is_null() {
        return Ok((0..count).map(|i| format!("{prefix}{i}")).collect());
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        // SAFETY: the caller guarantees `labels` holds `count` entries.
        let p = unsafe { *labels.add(i) };
        if p.is_null() {
            return Err(format!("label {i} is null"));
        }
        // SAFETY: non-null entries are NUL-terminated strings per the contract.
        let s = unsafe { CStr::from_ptr(p) }
            .to_str()
            .map_err(|_| format!("label {i} is not UTF-8"))?;
        out.push(s.to_owned());
    }
    Ok(out)
}

/// Creates a matrix from `n_countries * n_domains` row-major cells (each 0
/// or 1). `countries` and `domains` may be null, in which case labels
/// `c0, c1, …` and `d0, d1, …` are used.
///
/// # Safety
/// `cells` must point to `n_countries * n_domains` bytes; non-null label
/// arrays must hold that many NUL-terminated UTF-8 strings; `out` must be
/// writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_matrix_new(
    cells: *const u8,
    n_countries: usize,
    n_domains: usize,
    countries: *const *const c_char,
    domains: *const *const c_char,
    out: *mut *mut GeoeconMatrix,
) -> i32 {
    guard(|| {
        if out.is_null() || (cells.is_null() && n_countries * n_domains > 0) {
            return fail(GEOECON_ERR_NULL_POINTER, "cells or out is null");
        }
        let Some(len) = n_countries.checked_mul(n_domains) else {
            return fail(GEOECON_ERR_INVALID_ARGUMENT, "matrix size overflows");
        };
        let flat: &[u8] = if len == 0 {
            &[]
        } else {
            // SAFETY: checked non-null above; the caller guarantees the length.
            unsafe { std::slice::from_raw_parts(cells, len) }
        };
        // SAFETY: forwarded caller contract.
        let country_labels = match unsafe { read_labels(countries, n_countries, "c") } {
            Ok(v) => v,
            Err(e) => return fail(GEOECON_ERR_INVALID_ARGUMENT, e),
        };
        // SAFETY: forwarded caller contract.
        let domain_labels = match unsafe { read_labels(domains, n_domains, "d") } {
            Ok(v) => v,
            Err(e) => return fail(GEOECON_ERR_INVALID_ARGUMENT, e),
        };
        let rows = if n_domains == 0 {
            vec![Vec::new(); n_countries]
        } else {
            flat.chunks(n_domains).map(<[u8]>::to_vec).collect()
        };
        match SpecializationMatrix::new(country_labels, domain_labels, rows) {
            Ok(inner) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = Box::into_raw(Box::new(GeoeconMatrix { inner })) };
                GEOECON_OK
            }
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `matrix` must be null or a handle from [`geoecon_matrix_new`] not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_matrix_free(matrix: *mut GeoeconMatrix) {
    if !matrix.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(matrix) });
    }
}

/// Computes all indices for `matrix`.
///
/// # Safety
/// `matrix` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_report_compute(
    matrix: *const GeoeconMatrix,
    out: *mut *mut GeoeconReport,
) -> i32 {
    guard(|| {
        if matrix.is_null() || out.is_null() {
            return fail(GEOECON_ERR_NULL_POINTER, "matrix or out is null");
        }
        // SAFETY: checked non-null; caller guarantees liveness.
        let m = unsafe { &(*matrix).inner };
        match analyze(m) {
            Ok(inner) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = Box::into_raw(Box::new(GeoeconReport { inner })) };
                GEOECON_OK
            }
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `report` must be null or a handle from [`geoecon_report_compute`] not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_report_free(report: *mut GeoeconReport) {
    if !report.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Number of countries in the report, 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_report_country_count(report: *const GeoeconReport) -> usize {
    // SAFETY: caller contract.
    unsafe { report.as_ref() }.map_or(0, |r| r.inner.countries.len())
}

/// Number of domains in the report, 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_report_domain_count(report: *const GeoeconReport) -> usize {
    // SAFETY: caller contract.
    unsafe { report.as_ref() }.map_or(0, |r| r.inner.domains.len())
}

unsafe fn entry<T: Copy>(
    report: *const GeoeconReport,
    index: usize,
    out: *mut T,
    pick: impl Fn(&ComplexityReport, usize) -> Option<Option<T>>,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return fail(GEOECON_ERR_NULL_POINTER, "out is null");
        }
        // SAFETY: caller contract.
        let Some(r) = (unsafe { report.as_ref() }) else {
            return fail(GEOECON_ERR_NULL_POINTER, "report is null");
        };
        match pick(&r.inner, index) {
            None => fail(GEOECON_ERR_OUT_OF_RANGE, format!("index {index} out of range")),
            Some(None) => fail(GEOECON_ERR_NO_VALUE, format!("entry {index} has no value")),
            Some(Some(v)) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = v };
                GEOECON_OK
            }
        }
    })
}

/// GCI of country `index`; `GEOECON_ERR_NO_VALUE` for a country with no
/// specialization.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_report_gci(
    report: *const GeoeconReport,
    index: usize,
    out: *mut f64,
) -> i32 {
    // SAFETY: forwarded caller contract.
    unsafe { entry(report, index, out, |r, i| r.gci.get(i).copied()) }
}

/// 1-based rank of country `index` by GCI.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_report_country_rank(
    report: *const GeoeconReport,
    index: usize,
    out: *mut usize,
) -> i32 {
    // SAFETY: forwarded caller contract.
    unsafe { entry(report, index, out, |r, i| r.country_rank.get(i).copied()) }
}

/// Number of domains country `index` is specialized in.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_report_diversity(
    report: *const GeoeconReport,
    index: usize,
    out: *mut usize,
) -> i32 {
    // SAFETY: forwarded caller contract.
    unsafe { entry(report, index, out, |r, i| r.diversity.get(i).map(|&d| Some(d))) }
}

/// ETGCI of domain `index` in [0, 1]; `GEOECON_ERR_NO_VALUE` for a domain no
/// country is specialized in.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_report_etgci(
    report: *const GeoeconReport,
    index: usize,
    out: *mut f64,
) -> i32 {
    // SAFETY: forwarded caller contract.
    unsafe { entry(report, index, out, |r, i| r.etgci.get(i).copied()) }
}

/// Number of countries specialized in domain `index`.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_report_ubiquity(
    report: *const GeoeconReport,
    index: usize,
    out: *mut usize,
) -> i32 {
    // SAFETY: forwarded caller contract.
    unsafe { entry(report, index, out, |r, i| r.ubiquity.get(i).map(|&u| Some(u))) }
}

fn hand_out(text: String, out: *mut *mut c_char) -> i32 {
    match CString::new(text) {
        Ok(s) => {
            // SAFETY: callers check `out` before reaching here.
            unsafe { *out = s.into_raw() };
            GEOECON_OK
        }
        Err(_) => fail(GEOECON_ERR_COMPUTATION, "output contains a NUL byte"),
    }
}

/// The report as an `indices.json` document. Free with [`geoecon_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_indices_json(
    report: *const GeoeconReport,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        if report.is_null() || out.is_null() {
            return fail(GEOECON_ERR_NULL_POINTER, "report or out is null");
        }
        // SAFETY: checked non-null; caller guarantees liveness.
        let r = unsafe { &(*report).inner };
        hand_out(r.to_indices_json(&[]), out)
    })
}

/// Best single additions per country as an `ssset.csv` document. Free with
/// [`geoecon_string_free`].
///
/// # Safety
/// `matrix` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_ssset_csv(
    matrix: *const GeoeconMatrix,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        if matrix.is_null() || out.is_null() {
            return fail(GEOECON_ERR_NULL_POINTER, "matrix or out is null");
        }
        // SAFETY: checked non-null; caller guarantees liveness.
        let m = unsafe { &(*matrix).inner };
        match find_ssset(m) {
            Ok(report) => hand_out(report.to_csv(), out),
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn geoecon_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { CString::from_raw(s) });
    }
}
