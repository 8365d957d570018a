//! C ABI over `orlicz-var`.
//!
//! Every fallible call returns an [`OvStatus`]; on anything but `Ok` the
//! message is available from [`ov_last_error`] on the same thread. Handles are
//! opaque and must be released with their `*_free` function.

use orlicz_var::cli::{parse_config, verify_suite, Config, SuiteOptions};
use orlicz_var::mo::conjugate;
use orlicz_var::sobolev::SobolevConjugate;
use orlicz_var::solver::{minimize, ProblemSpec};
use orlicz_var::spaces::{luxemburg_norm, DiscreteField};
use orlicz_var::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Syntax = 3,
    Semantic = 4,
    Domain = 5,
    Numerical = 6,
    Io = 7,
    Panic = 8,
}

/// Parsed problem file together with its assembled problem.
pub struct OvProblem {
    config: Config,
    spec: ProblemSpec,
}

/// Nodal values on a problem grid.
pub struct OvField {
    field: DiscreteField,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> OvStatus {
    match e {
        Error::Syntax { .. } => OvStatus::Syntax,
        Error::Semantic(_) => OvStatus::Semantic,
        Error::Domain(_) => OvStatus::Domain,
        Error::InvalidInput(_) => OvStatus::InvalidInput,
        Error::Io(_) => OvStatus::Io,
        _ => OvStatus::Numerical,
    }
}

fn fail(status: OvStatus, msg: &str) -> OvStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), (OvStatus, String)>) -> OvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OvStatus::Ok
        }
        Ok(Err((s, m))) => fail(s, &m),
        Err(_) => fail(OvStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: orlicz_var::Result<T>) -> Result<T, (OvStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (OvStatus, String) {
    (OvStatus::NullPointer, format!("{what} is null"))
}

unsafe fn point<'a>(x: *const f64, len: usize, p: &OvProblem) -> Result<&'a [f64], (OvStatus, String)> {
    if x.is_null() {
        return Err(null("x"));
    }
    if len != p.config.dim() {
        return Err((
            OvStatus::InvalidInput,
            format!("x has length {len}, problem dimension is {}", p.config.dim()),
        ));
    }
    Ok(std::slice::from_raw_parts(x, len))
}

fn component(p: &OvProblem, k: usize) -> Result<&orlicz_var::MoFunction, (OvStatus, String)> {
    let c = p.spec.family.components();
    if k == 0 || k > c.len() {
        return Err((
            OvStatus::InvalidInput,
            format!("component {k} out of range 1..={}", c.len()),
        ));
    }
    Ok(&c[k - 1])
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ov_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next `ov_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ov_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses an `orlicz-var v1` problem text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_problem_parse(text: *const c_char, out: *mut *mut OvProblem) -> OvStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (OvStatus::InvalidInput, "text is not UTF-8".to_string()))?;
        let config = lift(parse_config(text))?;
        let spec = lift(config.problem())?;
        *out = Box::into_raw(Box::new(OvProblem { config, spec }));
        Ok(())
    })
}

/// Reads and parses a problem file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_problem_load(path: *const c_char, out: *mut *mut OvProblem) -> OvStatus {
    if path.is_null() {
        return fail(OvStatus::NullPointer, "path is null");
    }
    let text = match CStr::from_ptr(path).to_str().map(std::fs::read_to_string) {
        Ok(Ok(t)) => t,
        Ok(Err(e)) => return fail(OvStatus::Io, &e.to_string()),
        Err(_) => return fail(OvStatus::InvalidInput, "path is not UTF-8"),
    };
    match CString::new(text) {
        Ok(c) => ov_problem_parse(c.as_ptr(), out),
        Err(_) => fail(OvStatus::InvalidInput, "file contains NUL"),
    }
}

/// # Safety
/// `p` must come from `ov_problem_parse`/`ov_problem_load` or be null.
#[no_mangle]
pub unsafe extern "C" fn ov_problem_free(p: *mut OvProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Space dimension N, 0 for a null handle.
///
/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ov_problem_dim(p: *const OvProblem) -> usize {
    p.as_ref().map_or(0, |p| p.config.dim())
}

/// Number of grid nodes, 0 for a null handle.
///
/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ov_problem_node_count(p: *const OvProblem) -> usize {
    p.as_ref().map_or(0, |p| p.spec.grid.len())
}

/// `φ_k*(x, s)` for component `k` (1-based).
///
/// # Safety
/// `x` must point to `x_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_conjugate(
    p: *const OvProblem,
    k: usize,
    x: *const f64,
    x_len: usize,
    s: f64,
    out: *mut f64,
) -> OvStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = point(x, x_len, p)?;
        *out = lift(conjugate(component(p, k)?, x, s))?;
        Ok(())
    })
}

/// Sobolev conjugate of the family's `φ_min**` at `(x, t)`.
///
/// # Safety
/// `x` must point to `x_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_sobolev_forward(
    p: *const OvProblem,
    x: *const f64,
    x_len: usize,
    t: f64,
    out: *mut f64,
) -> OvStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = point(x, x_len, p)?;
        let sc = lift(SobolevConjugate::from_family(&p.spec.family))?;
        *out = lift(sc.forward(x, t))?;
        Ok(())
    })
}

/// Wraps `len` nodal values (row-major, first axis slowest) on the problem grid.
///
/// # Safety
/// `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_field_new(
    p: *const OvProblem,
    values: *const f64,
    len: usize,
    out: *mut *mut OvField,
) -> OvStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let field = lift(DiscreteField::new(p.spec.grid.clone(), v))?;
        *out = Box::into_raw(Box::new(OvField { field }));
        Ok(())
    })
}

/// Node count of a field, 0 for null.
///
/// # Safety
/// `f` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ov_field_len(f: *const OvField) -> usize {
    f.as_ref().map_or(0, |f| f.field.values().len())
}

/// Copies the nodal values into `buf`, which must hold `ov_field_len(f)` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ov_field_values(f: *const OvField, buf: *mut f64, len: usize) -> OvStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("field"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let v = f.field.values();
        if len < v.len() {
            return Err((
                OvStatus::InvalidInput,
                format!("buffer holds {len}, field has {}", v.len()),
            ));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// # Safety
/// `f` must come from an `ov_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn ov_field_free(f: *mut OvField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Luxemburg norm of `u` for component `k` (1-based).
///
/// # Safety
/// `p`, `u` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_luxemburg_norm(
    p: *const OvProblem,
    k: usize,
    u: *const OvField,
    out: *mut f64,
) -> OvStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        let u = u.as_ref().ok_or_else(|| null("field"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lift(luxemburg_norm(component(p, k)?, &u.field))?.value;
        Ok(())
    })
}

/// Minimizes the energy from `u ≡ 0` with the problem's solver settings.
/// A run that stops before the gradient tolerance still returns its iterate,
/// with `*converged = false`.
///
/// # Safety
/// `out_field`, `energy` and `converged` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_solve(
    p: *const OvProblem,
    out_field: *mut *mut OvField,
    energy: *mut f64,
    converged: *mut bool,
) -> OvStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        if out_field.is_null() || energy.is_null() || converged.is_null() {
            return Err(null("output pointer"));
        }
        let u0 = DiscreteField::zeros(p.spec.grid.clone());
        let r = lift(minimize(&p.spec, &u0, &p.config.solver_options()))?;
        *energy = r.energy();
        *converged = r.converged();
        *out_field = Box::into_raw(Box::new(OvField { field: r.minimizer }));
        Ok(())
    })
}

/// Runs the verify suite. `*passed` is false when a hard check fails; the
/// table (one row per check) is returned in `*table`, to be released with
/// `ov_string_free`. `table` may be null.
///
/// # Safety
/// `passed` must be writable; `table` writable or null.
#[no_mangle]
pub unsafe extern "C" fn ov_verify(
    p: *const OvProblem,
    seed: u64,
    passed: *mut bool,
    table: *mut *mut c_char,
) -> OvStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        if passed.is_null() {
            return Err(null("passed"));
        }
        let opts = SuiteOptions {
            seed,
            ..SuiteOptions::default()
        };
        let report = lift(verify_suite(&p.config, &p.spec, &opts))?;
        *passed = report.passed();
        if !table.is_null() {
            *table = CString::new(report.table()).unwrap_or_default().into_raw();
        }
        Ok(())
    })
}

/// # Safety
/// `s` must come from an `ov_*` function returning an owned string, or be null.
#[no_mangle]
pub unsafe extern "C" fn ov_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
