//! C ABI for `ssc-core`.
//!
//! Matrices and reports are opaque handles created and freed by this library.
//! Every fallible call returns an [`SscStatus`]; on failure the message is
//! available from [`ssc_last_error`] on the same thread. Strings returned to
//! the caller must be released with [`ssc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use ssc_core::bnb::verify_certificate_at;
use ssc_core::error::Error;
use ssc_core::geometry::{FactorMatrix, Tolerances};
use ssc_core::ssc::{check_ssc, Method, Reason, SscOptions as CoreOptions, SscReport as CoreReport, Verdict};
use ssc_core::synth::{generate_raw, GenSpec};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMatrix = 3,
    BudgetExceeded = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SscVerdict {
    Holds = 0,
    Fails = 1,
    Unknown = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SscReason {
    NcsscFailed = 0,
    NormExceedsOne = 1,
    ExtraMaximizer = 2,
    AllChecksPassed = 3,
    DeadlineReached = 4,
    SparsityScreenFailed = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SscMethod {
    Auto = 0,
    Bnb = 1,
    Oracle = 2,
}

/// Options for [`ssc_check`]; start from [`ssc_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SscOptions {
    pub eps_feas: f64,
    pub eps_gap: f64,
    pub stop_threshold: f64,
    pub eps_pool: f64,
    pub delta_unit: f64,
    pub deadline_s: f64,
    pub method: SscMethod,
    pub workers: u32,
    pub strict_sparsity: bool,
}

/// Opaque nonnegative factor matrix.
pub struct SscMatrix {
    inner: FactorMatrix,
}

/// Opaque result of [`ssc_check`].
pub struct SscReport {
    inner: CoreReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> SscStatus {
    match err {
        Error::NegativeEntry { .. }
        | Error::NonFiniteEntry { .. }
        | Error::RankTooSmall(_)
        | Error::NoColumns
        | Error::DimensionMismatch { .. } => SscStatus::InvalidMatrix,
        Error::InvalidTolerance(_)
        | Error::InvalidSpec(_)
        | Error::InvalidBox { .. }
        | Error::UnboundedBox => SscStatus::InvalidArgument,
        Error::BudgetExceeded { .. } => SscStatus::BudgetExceeded,
        _ => SscStatus::Numerical,
    }
}

/// Runs `f`, records its error message and converts panics.
fn guard<F: FnOnce() -> Result<(), (SscStatus, String)>>(f: F) -> SscStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SscStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SscStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (SscStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SscStatus, String) {
    (SscStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ssc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ssc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a matrix from `rows × cols` row-major entries.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut SscMatrix,
) -> SscStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if data.is_null() {
            return Err(null("data"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or((SscStatus::InvalidArgument, "size overflow".into()))?;
        let slice = std::slice::from_raw_parts(data, len);
        let inner = FactorMatrix::from_row_major(rows, cols, slice).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SscMatrix { inner }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`ssc_matrix_new`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ssc_matrix_free(m: *mut SscMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of rows r, or 0 for null.
///
/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_matrix_rank(m: *const SscMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.rank())
}

/// Number of nonzero columns kept, or 0 for null.
///
/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_matrix_ncols(m: *const SscMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.ncols())
}

#[no_mangle]
pub extern "C" fn ssc_options_default() -> SscOptions {
    let core = CoreOptions::default();
    SscOptions {
        eps_feas: core.tol.eps_feas,
        eps_gap: core.tol.eps_gap,
        stop_threshold: core.tol.stop_threshold,
        eps_pool: core.tol.eps_pool,
        delta_unit: core.tol.delta_unit,
        deadline_s: core.deadline.as_secs_f64(),
        method: SscMethod::Auto,
        workers: core.workers as u32,
        strict_sparsity: core.strict_sparsity,
    }
}

fn tolerances(o: &SscOptions) -> Tolerances {
    Tolerances {
        eps_feas: o.eps_feas,
        eps_gap: o.eps_gap,
        stop_threshold: o.stop_threshold,
        eps_pool: o.eps_pool,
        delta_unit: o.delta_unit,
    }
}

fn core_options(o: &SscOptions) -> Result<CoreOptions, (SscStatus, String)> {
    if !(o.deadline_s.is_finite() && o.deadline_s >= 0.0) {
        return Err((
            SscStatus::InvalidArgument,
            "deadline_s must be a nonnegative number".into(),
        ));
    }
    let tol = tolerances(o);
    tol.validate().map_err(core_err)?;
    Ok(CoreOptions {
        tol,
        deadline: Duration::from_secs_f64(o.deadline_s),
        method: match o.method {
            SscMethod::Auto => Method::Auto,
            SscMethod::Bnb => Method::Bnb,
            SscMethod::Oracle => Method::Oracle,
        },
        workers: o.workers.max(1) as usize,
        strict_sparsity: o.strict_sparsity,
        ..CoreOptions::default()
    })
}

/// Decides the condition for `m`. `options` may be null for defaults.
///
/// # Safety
/// `m` must be a live matrix handle, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_check(
    m: *const SscMatrix,
    options: *const SscOptions,
    out: *mut *mut SscReport,
) -> SscStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        let opts = match options.as_ref() {
            Some(o) => core_options(o)?,
            None => CoreOptions::default(),
        };
        let inner = check_ssc(&m.inner, &opts).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SscReport { inner }));
        Ok(())
    })
}

/// # Safety
/// `rep` must come from [`ssc_check`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ssc_report_free(rep: *mut SscReport) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// Verdict of a report; `Unknown` for null.
///
/// # Safety
/// `rep` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_report_verdict(rep: *const SscReport) -> SscVerdict {
    match rep.as_ref().map(|r| r.inner.verdict) {
        Some(Verdict::Holds) => SscVerdict::Holds,
        Some(Verdict::Fails) => SscVerdict::Fails,
        _ => SscVerdict::Unknown,
    }
}

/// Reason of a report; `DeadlineReached` for null.
///
/// # Safety
/// `rep` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_report_reason(rep: *const SscReport) -> SscReason {
    match rep.as_ref().map(|r| r.inner.reason) {
        Some(Reason::NcsscFailed) => SscReason::NcsscFailed,
        Some(Reason::NormExceedsOne) => SscReason::NormExceedsOne,
        Some(Reason::ExtraMaximizer) => SscReason::ExtraMaximizer,
        Some(Reason::AllChecksPassed) => SscReason::AllChecksPassed,
        Some(Reason::SparsityScreenFailed) => SscReason::SparsityScreenFailed,
        Some(Reason::DeadlineReached) | None => SscReason::DeadlineReached,
    }
}

/// Copies the certificate point into `buf` and stores its length in `len`
/// (0 when the report has no certificate).
///
/// # Safety
/// `rep` must be a live report handle, `len` writable and `buf` writable for
/// `cap` doubles (it may be null when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn ssc_report_certificate(
    rep: *const SscReport,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> SscStatus {
    guard(|| {
        let rep = rep.as_ref().ok_or_else(|| null("report"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        let point = rep.inner.certificate.as_ref().map_or(&[][..], |c| &c.point[..]);
        *len = point.len();
        if point.is_empty() {
            return Ok(());
        }
        if buf.is_null() || cap < point.len() {
            return Err((
                SscStatus::BufferTooSmall,
                format!("certificate needs {} doubles", point.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, point.len()).copy_from_slice(point);
        Ok(())
    })
}

/// The full report as pretty-printed JSON, or null on failure. Release with
/// [`ssc_string_free`].
///
/// # Safety
/// `rep` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_report_to_json(rep: *const SscReport) -> *mut c_char {
    let mut out = ptr::null_mut();
    guard(|| {
        let rep = rep.as_ref().ok_or_else(|| null("report"))?;
        let s = CString::new(rep.inner.to_json()).map_err(|e| (SscStatus::Numerical, e.to_string()))?;
        out = s.into_raw();
        Ok(())
    });
    out
}

/// # Safety
/// `s` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ssc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Checks that `x` is feasible for `m` within `eps_feas` and has squared norm
/// at least `threshold`. Writes the answer to `ok`.
///
/// # Safety
/// `m` must be a live matrix handle, `x` readable for `len` doubles and `ok` writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_verify_certificate(
    m: *const SscMatrix,
    x: *const f64,
    len: usize,
    threshold: f64,
    eps_feas: f64,
    ok: *mut bool,
) -> SscStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        if x.is_null() || ok.is_null() {
            return Err(null("x or ok"));
        }
        let x = std::slice::from_raw_parts(x, len);
        *ok = verify_certificate_at(&m.inner, x, threshold, eps_feas);
        Ok(())
    })
}

/// Writes a random `r × n` matrix with `k` nonzeros per column, row-major,
/// into `out` (capacity `cap` doubles).
///
/// # Safety
/// `out` must be writable for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ssc_generate(
    r: usize,
    n: usize,
    k: usize,
    seed: u64,
    out: *mut f64,
    cap: usize,
) -> SscStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = generate_raw(&GenSpec { r, n, k, seed }).map_err(core_err)?;
        if cap < data.len() {
            return Err((SscStatus::BufferTooSmall, format!("need {} doubles", data.len())));
        }
        std::slice::from_raw_parts_mut(out, data.len()).copy_from_slice(&data);
        Ok(())
    })
}
