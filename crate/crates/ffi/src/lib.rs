//! C ABI over the `selfsim` solver.
//!
//! Every function returns a [`SelfsimStatus`]; on failure the message is
//! available from [`selfsim_last_error`] on the same thread. Handles are
//! opaque and must be released with the matching `_free` function. Panics
//! never cross the boundary; they are reported as `SELFSIM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use selfsim::cli::output::{to_json, CatalogEntryRecord, CatalogRecord, ParamsRecord};
use selfsim::phase::critical_catalog;
use selfsim::shooting::{find_interface, shoot, SearchConfig, SearchError, ShotConfig, ShotKind, ShotOutcome};
use selfsim::{Mode, Problem};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfsimStatus {
    Ok = 0,
    /// Parameters or options outside their admissible range.
    Validation = 1,
    /// The computation ran but did not produce a result (no bracket, failed
    /// extraction, budget exhausted).
    Numerical = 2,
    Io = 3,
    NullPointer = 4,
    /// Buffer passed to a copy function is too small.
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfsimShotKind {
    SignChange = 0,
    GrowUp = 1,
    Interface = 2,
    Undetermined = 3,
}

/// Derived constants of a parameter set.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SelfsimExponents {
    pub alpha: f64,
    pub beta: f64,
    pub l: f64,
    pub p_c: f64,
    pub k_series: f64,
    pub uniqueness_guaranteed: bool,
}

/// Integration options; start from [`selfsim_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SelfsimOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Shots stop once f drops below f_floor·f(0).
    pub f_floor: f64,
    /// Relative bracket width at which bisection stops.
    pub bisect_tol: f64,
    /// Scale applied to the series start radius.
    pub xi_init_scale: f64,
}

/// Scalar results of a shot; fields that do not apply to its kind are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SelfsimShotSummary {
    pub kind: SelfsimShotKind,
    pub d: f64,
    pub f0: f64,
    pub xi0: f64,
    pub c: f64,
    pub xi_min: f64,
    pub f_min: f64,
    pub tail_exponent: f64,
    pub trace_len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SelfsimInterface {
    pub d_star: f64,
    pub d_lo: f64,
    pub d_hi: f64,
    pub xi0: f64,
    pub c: f64,
    pub iterations: usize,
    pub uniqueness_guaranteed: bool,
    /// True when bisection stopped on a window where shots stop classifying
    /// consistently, before reaching `bisect_tol`.
    pub ambiguous: bool,
}

pub struct SelfsimProblem {
    inner: Problem,
}

pub struct SelfsimShot {
    inner: ShotOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SelfsimStatus, String);

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SelfsimStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SelfsimStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            SelfsimStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees p is null or points to a live T.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(SelfsimStatus::NullPointer, format!("{name} is null")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure(SelfsimStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(p)
    }
}

fn validation(e: impl std::fmt::Display) -> Failure {
    Failure(SelfsimStatus::Validation, e.to_string())
}

fn shot_config(opts: Option<&SelfsimOptions>) -> Result<ShotConfig, Failure> {
    let mut cfg = ShotConfig::default();
    if let Some(o) = opts {
        cfg.rel_tol = o.rel_tol;
        cfg.abs_tol = o.abs_tol;
        cfg.f_floor = o.f_floor;
        cfg.xi_init_scale = o.xi_init_scale;
    }
    cfg.validate().map_err(validation)?;
    Ok(cfg)
}

/// Last error message on this thread, or null. Valid until the next call
/// into the library from the same thread.
#[no_mangle]
pub extern "C" fn selfsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn selfsim_options_default() -> SelfsimOptions {
    let s = SearchConfig::default();
    SelfsimOptions {
        rel_tol: s.shot.rel_tol,
        abs_tol: s.shot.abs_tol,
        f_floor: s.shot.f_floor,
        bisect_tol: s.bisect_tol,
        xi_init_scale: s.shot.xi_init_scale,
    }
}

/// Validate (m, p, σ, N) and create a problem handle. `exploratory` admits
/// the one-dimensional regimes with σ ≤ −1.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn selfsim_problem_new(
    m: f64,
    p: f64,
    sigma: f64,
    n: u32,
    exploratory: bool,
    out: *mut *mut SelfsimProblem,
) -> SelfsimStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let mode = if exploratory { Mode::Exploratory } else { Mode::Strict };
        let inner = Problem::from_raw(m, p, sigma, f64::from(n), mode).map_err(validation)?;
        unsafe { *out = Box::into_raw(Box::new(SelfsimProblem { inner })) };
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from [`selfsim_problem_new`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn selfsim_problem_free(problem: *mut SelfsimProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// # Safety
/// `problem` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn selfsim_problem_exponents(
    problem: *const SelfsimProblem,
    out: *mut SelfsimExponents,
) -> SelfsimStatus {
    guard(|| {
        let pb = &non_null(problem, "problem")?.inner;
        let out = out_ptr(out, "out")?;
        let c = pb.consts;
        unsafe {
            *out = SelfsimExponents {
                alpha: c.alpha,
                beta: c.beta,
                l: c.l,
                p_c: c.p_c,
                k_series: c.k_series,
                uniqueness_guaranteed: pb.params.uniqueness_guaranteed(),
            }
        };
        Ok(())
    })
}

/// Integrate one shot with f(0) = D^(1/(m−p)). `options` may be null for
/// the defaults.
///
/// # Safety
/// `problem` must be a live handle, `options` null or valid, `out` valid
/// for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn selfsim_shoot(
    problem: *const SelfsimProblem,
    d: f64,
    options: *const SelfsimOptions,
    out: *mut *mut SelfsimShot,
) -> SelfsimStatus {
    guard(|| {
        let pb = &non_null(problem, "problem")?.inner;
        let out = out_ptr(out, "out")?;
        let cfg = shot_config(unsafe { options.as_ref() })?;
        let inner = shoot(d, pb, &cfg).map_err(validation)?;
        unsafe { *out = Box::into_raw(Box::new(SelfsimShot { inner })) };
        Ok(())
    })
}

/// # Safety
/// `shot` must be null or a handle from [`selfsim_shoot`] that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn selfsim_shot_free(shot: *mut SelfsimShot) {
    if !shot.is_null() {
        drop(unsafe { Box::from_raw(shot) });
    }
}

/// # Safety
/// `shot` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn selfsim_shot_summary(shot: *const SelfsimShot, out: *mut SelfsimShotSummary) -> SelfsimStatus {
    guard(|| {
        let s = &non_null(shot, "shot")?.inner;
        let out = out_ptr(out, "out")?;
        let nan = f64::NAN;
        let mut sum = SelfsimShotSummary {
            kind: SelfsimShotKind::Undetermined,
            d: s.d,
            f0: s.f0,
            xi0: nan,
            c: nan,
            xi_min: nan,
            f_min: nan,
            tail_exponent: nan,
            trace_len: s.trace.len(),
        };
        match &s.kind {
            ShotKind::SignChange { xi0, .. } => {
                sum.kind = SelfsimShotKind::SignChange;
                sum.xi0 = *xi0;
            }
            ShotKind::GrowUp {
                xi_min,
                f_min,
                tail_exponent_fit,
                ..
            } => {
                sum.kind = SelfsimShotKind::GrowUp;
                sum.xi_min = *xi_min;
                sum.f_min = *f_min;
                sum.tail_exponent = *tail_exponent_fit;
            }
            ShotKind::Interface { xi0, c, .. } => {
                sum.kind = SelfsimShotKind::Interface;
                sum.xi0 = *xi0;
                sum.c = *c;
            }
            ShotKind::Undetermined { .. } => {}
        }
        unsafe { *out = sum };
        Ok(())
    })
}

/// Copy the trace (ξ, f, (f^m)′) into caller buffers of length `capacity`.
/// Any of the three buffers may be null to skip that column.
///
/// # Safety
/// `shot` must be a live handle; each non-null buffer must be valid for
/// `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn selfsim_shot_trace(
    shot: *const SelfsimShot,
    xi: *mut f64,
    f: *mut f64,
    v: *mut f64,
    capacity: usize,
) -> SelfsimStatus {
    guard(|| {
        let s = &non_null(shot, "shot")?.inner;
        let n = s.trace.len();
        if capacity < n {
            return Err(Failure(
                SelfsimStatus::BufferTooSmall,
                format!("trace has {n} points, buffer holds {capacity}"),
            ));
        }
        for (col, get) in [
            (xi, (|p: &selfsim::profile::ProfilePoint| p.xi) as fn(&_) -> f64),
            (f, |p| p.f),
            (v, |p| p.v),
        ] {
            if col.is_null() {
                continue;
            }
            // SAFETY: col holds at least capacity >= n elements.
            let dst = unsafe { std::slice::from_raw_parts_mut(col, n) };
            for (d, p) in dst.iter_mut().zip(&s.trace) {
                *d = get(p);
            }
        }
        Ok(())
    })
}

/// Bracket and bisect for the interface profile. `options` may be null.
///
/// # Safety
/// `problem` must be a live handle, `options` null or valid, `out` valid
/// for writing.
#[no_mangle]
pub unsafe extern "C" fn selfsim_find_interface(
    problem: *const SelfsimProblem,
    options: *const SelfsimOptions,
    out: *mut SelfsimInterface,
) -> SelfsimStatus {
    guard(|| {
        let pb = &non_null(problem, "problem")?.inner;
        let out = out_ptr(out, "out")?;
        let opts = unsafe { options.as_ref() };
        let mut search = SearchConfig {
            shot: shot_config(opts)?,
            ..Default::default()
        };
        if let Some(o) = opts {
            search.bisect_tol = o.bisect_tol;
        }
        search.validate().map_err(validation)?;
        let r = find_interface(pb, &search).map_err(|e| match e {
            SearchError::Config(_) => validation(e),
            _ => Failure(SelfsimStatus::Numerical, e.to_string()),
        })?;
        unsafe {
            *out = SelfsimInterface {
                d_star: r.d_star,
                d_lo: r.d_lo,
                d_hi: r.d_hi,
                xi0: r.xi0_star,
                c: r.c_star,
                iterations: r.iterations,
                uniqueness_guaranteed: r.uniqueness_guaranteed,
                ambiguous: r.ambiguity_window.is_some(),
            }
        };
        Ok(())
    })
}

/// Critical-point catalog as JSON. Release the string with
/// [`selfsim_string_free`].
///
/// # Safety
/// `problem` must be a live handle and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn selfsim_catalog_json(problem: *const SelfsimProblem, out: *mut *mut c_char) -> SelfsimStatus {
    guard(|| {
        let pb = &non_null(problem, "problem")?.inner;
        let out = out_ptr(out, "out")?;
        let rec = CatalogRecord {
            params: ParamsRecord::new(pb),
            entries: critical_catalog(pb).iter().map(CatalogEntryRecord::from).collect(),
        };
        let s = CString::new(to_json(&rec)).map_err(|e| Failure(SelfsimStatus::Io, e.to_string()))?;
        unsafe { *out = s.into_raw() };
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn selfsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
