//! C ABI for the qlame library.
//!
//! Every function returns a [`QlameStatus`]; on failure the message is
//! available from [`qlame_last_error_message`] on the same thread. Handles
//! are opaque and must be released with their `_free` function. Strings
//! returned through `char **` out-parameters are released with
//! [`qlame_string_free`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use qlame::bethe::{eps_l, eps_n, solve_given_c, BethePoint, BetheRecord, SolverConfig};
use qlame::config::RunConfig;
use qlame::diffop::{DifferenceOperator, SampleSet};
use qlame::elliptic::{theta1, ModularData, SeriesConfig};
use qlame::family::{make_l, make_m, make_n};
use qlame::verify::cmd_verify;
use qlame::{Complex64, Error};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlameStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Pole = 4,
    Numerical = 5,
    Config = 6,
    Io = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QlameComplex {
    pub re: f64,
    pub im: f64,
}

impl From<QlameComplex> for Complex64 {
    fn from(z: QlameComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for QlameComplex {
    fn from(z: Complex64) -> Self {
        QlameComplex { re: z.re, im: z.im }
    }
}

/// Modular parameters `(γ, τ)`.
pub struct QlameModular(Arc<ModularData>);

/// A difference operator.
pub struct QlameOperator(DifferenceOperator);

/// Solutions of the Bethe equations at one multiplier.
pub struct QlameBetheSet {
    md: Arc<ModularData>,
    points: Vec<BethePoint>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QlameStatus {
    match e {
        Error::Domain(_) | Error::ComplexShift(_) => QlameStatus::Domain,
        Error::PoleProximity { .. } => QlameStatus::Pole,
        Error::DegenerateParameter(_) => QlameStatus::InvalidArgument,
        Error::Config(_) => QlameStatus::Config,
        Error::Io(_) | Error::Json(_) => QlameStatus::Io,
        _ if e.is_numerical() => QlameStatus::Numerical,
        _ => QlameStatus::Domain,
    }
}

struct Failure(QlameStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QlameStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> QlameStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QlameStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("internal panic: {msg}"));
            QlameStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(QlameStatus::Io, "string contains NUL".into()))
}

/// Message for the most recent failure on this thread; empty after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qlame_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn qlame_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `θ₁(z, τ)` with default series settings.
///
/// # Safety
/// `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_theta1(z: QlameComplex, tau: QlameComplex, result: *mut QlameComplex) -> QlameStatus {
    guard(|| {
        let r = out(result, "result")?;
        *r = theta1(z.into(), tau.into(), &SeriesConfig::default())?.into();
        Ok(())
    })
}

/// # Safety
/// `result` must be a valid pointer; `*result` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn qlame_modular_new(
    gamma: QlameComplex,
    tau: QlameComplex,
    result: *mut *mut QlameModular,
) -> QlameStatus {
    guard(|| {
        let r = out(result, "result")?;
        let md = ModularData::new(gamma.into(), tau.into())?;
        *r = Box::into_raw(Box::new(QlameModular(Arc::new(md))));
        Ok(())
    })
}

/// Modular data at `γ = √2/10`, `τ = i`.
///
/// # Safety
/// `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_modular_default(result: *mut *mut QlameModular) -> QlameStatus {
    guard(|| {
        let r = out(result, "result")?;
        *r = Box::into_raw(Box::new(QlameModular(Arc::new(ModularData::default_params()))));
        Ok(())
    })
}

/// # Safety
/// `md` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qlame_modular_free(md: *mut QlameModular) {
    if !md.is_null() {
        drop(Box::from_raw(md));
    }
}

/// `[x] = θ(γx)/θ(γ)`.
///
/// # Safety
/// `md` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_bracket(md: *const QlameModular, x: QlameComplex, result: *mut QlameComplex) -> QlameStatus {
    guard(|| {
        let md = handle(md, "md")?;
        let r = out(result, "result")?;
        *r = md.0.ell_num(x.into())?.into();
        Ok(())
    })
}

unsafe fn new_operator(
    md: *const QlameModular,
    result: *mut *mut QlameOperator,
    build: impl FnOnce(&Arc<ModularData>) -> DifferenceOperator,
) -> QlameStatus {
    guard(|| {
        let md = handle(md, "md")?;
        let r = out(result, "result")?;
        *r = Box::into_raw(Box::new(QlameOperator(build(&md.0))));
        Ok(())
    })
}

/// The q-Lamé operator `L` for coupling `m`.
///
/// # Safety
/// `md` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_operator_l(md: *const QlameModular, m: u32, result: *mut *mut QlameOperator) -> QlameStatus {
    new_operator(md, result, |md| make_l(m, md))
}

/// The family member `M_l`.
///
/// # Safety
/// `md` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_operator_m(
    md: *const QlameModular,
    l: QlameComplex,
    m: u32,
    result: *mut *mut QlameOperator,
) -> QlameStatus {
    new_operator(md, result, |md| make_m(l.into(), m, md))
}

/// `N = M_{m+1} − S M_{m+1} S`.
///
/// # Safety
/// `md` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_operator_n(md: *const QlameModular, m: u32, result: *mut *mut QlameOperator) -> QlameStatus {
    new_operator(md, result, |md| make_n(m, md))
}

/// `a ∘ b`.
///
/// # Safety
/// `a`, `b` must be live handles and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_operator_compose(
    a: *const QlameOperator,
    b: *const QlameOperator,
    result: *mut *mut QlameOperator,
) -> QlameStatus {
    guard(|| {
        let a = handle(a, "a")?;
        let b = handle(b, "b")?;
        let r = out(result, "result")?;
        *r = Box::into_raw(Box::new(QlameOperator(a.0.compose(&b.0))));
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qlame_operator_free(op: *mut QlameOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// # Safety
/// `op` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_operator_num_terms(op: *const QlameOperator, result: *mut usize) -> QlameStatus {
    guard(|| {
        let op = handle(op, "op")?;
        *out(result, "result")? = op.0.len();
        Ok(())
    })
}

/// Shift of term `index` and its coefficient evaluated at `x`.
///
/// # Safety
/// `op` must be a live handle; `shift` and `coeff` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qlame_operator_term(
    op: *const QlameOperator,
    index: usize,
    x: QlameComplex,
    shift: *mut QlameComplex,
    coeff: *mut QlameComplex,
) -> QlameStatus {
    guard(|| {
        let op = handle(op, "op")?;
        let s = out(shift, "shift")?;
        let c = out(coeff, "coeff")?;
        let term = op.0.terms().get(index).ok_or_else(|| {
            Failure(
                QlameStatus::OutOfRange,
                format!("term {index} out of range ({} terms)", op.0.len()),
            )
        })?;
        *s = term.shift.into();
        *c = term.coeff.eval(x.into()).into();
        Ok(())
    })
}

/// `(op f)(x)` for a callback `f`.
///
/// # Safety
/// `op` must be a live handle and `result` a valid pointer; `f` is called
/// with `user_data` and must not unwind.
#[no_mangle]
pub unsafe extern "C" fn qlame_operator_apply(
    op: *const QlameOperator,
    f: Option<extern "C" fn(x: QlameComplex, user_data: *mut c_void) -> QlameComplex>,
    user_data: *mut c_void,
    x: QlameComplex,
    result: *mut QlameComplex,
) -> QlameStatus {
    guard(|| {
        let op = handle(op, "op")?;
        let f = f.ok_or_else(|| null("f"))?;
        let r = out(result, "result")?;
        let value = op.0.apply(|y: Complex64| f(y.into(), user_data).into(), x.into())?;
        *r = value.into();
        Ok(())
    })
}

/// Coefficient-wise comparison of `a` and `b` at `count` seeded samples
/// avoiding both operators' poles.
///
/// # Safety
/// `a`, `b` must be live handles; `residual` and `equal` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qlame_operator_equal(
    a: *const QlameOperator,
    b: *const QlameOperator,
    count: usize,
    seed: u64,
    tol: f64,
    residual: *mut f64,
    equal: *mut bool,
) -> QlameStatus {
    guard(|| {
        let a = handle(a, "a")?;
        let b = handle(b, "b")?;
        let res = out(residual, "residual")?;
        let eq = out(equal, "equal")?;
        if count == 0 || !(tol > 0.0) {
            return Err(Failure(QlameStatus::InvalidArgument, "count and tol must be positive".into()));
        }
        let samples = SampleSet::for_operators(a.0.modular(), count, seed, &[&a.0, &b.0]);
        let rep = a.0.equal_on(&b.0, &samples, tol);
        *res = rep.max_residual;
        *eq = rep.pass;
        Ok(())
    })
}

/// Solve the Bethe equations at multiplier `c`.
///
/// # Safety
/// `md` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_bethe_solve(
    md: *const QlameModular,
    c: QlameComplex,
    m: u32,
    seed: u64,
    result: *mut *mut QlameBetheSet,
) -> QlameStatus {
    guard(|| {
        let md = handle(md, "md")?;
        let r = out(result, "result")?;
        let cfg = SolverConfig { seed, ..SolverConfig::default() };
        let points = solve_given_c(c.into(), m, &md.0, &cfg)?;
        *r = Box::into_raw(Box::new(QlameBetheSet { md: md.0.clone(), points }));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qlame_bethe_set_free(set: *mut QlameBetheSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_bethe_set_len(set: *const QlameBetheSet, result: *mut usize) -> QlameStatus {
    guard(|| {
        let set = handle(set, "set")?;
        *out(result, "result")? = set.points.len();
        Ok(())
    })
}

/// Roots, multiplier, residual and eigenvalues `(ε_L, ε_N)` of solution
/// `index`. `t` must have room for `t_capacity ≥ m` entries.
///
/// # Safety
/// `set` must be a live handle; `t` must point to `t_capacity` writable
/// entries; the remaining out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qlame_bethe_set_point(
    set: *const QlameBetheSet,
    index: usize,
    t: *mut QlameComplex,
    t_capacity: usize,
    c: *mut QlameComplex,
    residual: *mut f64,
    eps_l_out: *mut QlameComplex,
    eps_n_out: *mut QlameComplex,
) -> QlameStatus {
    guard(|| {
        let set = handle(set, "set")?;
        let p = set.points.get(index).ok_or_else(|| {
            Failure(
                QlameStatus::OutOfRange,
                format!("solution {index} out of range ({} solutions)", set.points.len()),
            )
        })?;
        if t_capacity < p.t.len() {
            return Err(Failure(
                QlameStatus::InvalidArgument,
                format!("t buffer holds {t_capacity} entries, need {}", p.t.len()),
            ));
        }
        if !p.t.is_empty() && t.is_null() {
            return Err(null("t"));
        }
        let el = eps_l(p, &set.md)?;
        let en = eps_n(p, &set.md)?;
        for (k, z) in p.t.iter().enumerate() {
            *t.add(k) = (*z).into();
        }
        *out(c, "c")? = p.c.into();
        *out(residual, "residual")? = p.residual;
        *out(eps_l_out, "eps_l")? = el.into();
        *out(eps_n_out, "eps_n")? = en.into();
        Ok(())
    })
}

/// JSON array of `{m, gamma, tau, t, c, residual}` records.
///
/// # Safety
/// `set` must be a live handle and `json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlame_bethe_set_to_json(set: *const QlameBetheSet, json: *mut *mut c_char) -> QlameStatus {
    guard(|| {
        let set = handle(set, "set")?;
        let j = out(json, "json")?;
        let records: Vec<BetheRecord> = set.points.iter().map(|p| p.to_record(&set.md)).collect();
        *j = into_c_string(serde_json::to_string(&records).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Run the verification suites. `config` holds `key=value` lines (or is
/// null for the defaults). The JSON report is written to `*json`.
///
/// # Safety
/// `config` must be null or NUL-terminated; `json` and `overall_pass`
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qlame_verify(
    config: *const c_char,
    json: *mut *mut c_char,
    overall_pass: *mut bool,
) -> QlameStatus {
    guard(|| {
        let j = out(json, "json")?;
        let pass = out(overall_pass, "overall_pass")?;
        let mut cfg = RunConfig::default();
        if !config.is_null() {
            let text = CStr::from_ptr(config)
                .to_str()
                .map_err(|_| Failure(QlameStatus::Config, "config is not UTF-8".into()))?;
            cfg.apply_text(text, "config")?;
        }
        let report = cmd_verify(&cfg)?;
        *pass = report.overall_pass;
        *j = into_c_string(serde_json::to_string(&report).map_err(Error::from)?)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Config("x".into())), QlameStatus::Config);
        assert_eq!(status_of(&Error::NoSolution(Complex64::new(0.0, 0.0))), QlameStatus::Numerical);
        assert_eq!(
            status_of(&Error::PoleProximity { x: Complex64::new(0.0, 0.0), detail: String::new() }),
            QlameStatus::Pole
        );
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, QlameStatus::Panic);
        let msg = unsafe { CStr::from_ptr(qlame_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn null_out_pointer() {
        let s = unsafe { qlame_theta1(QlameComplex { re: 0.1, im: 0.0 }, QlameComplex { re: 0.0, im: 1.0 }, ptr::null_mut()) };
        assert_eq!(s, QlameStatus::NullPointer);
    }
}
