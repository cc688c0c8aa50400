//! C ABI over `edqbd`. Every object is an opaque handle owned by the caller and
//! released with its `_free` function. Every fallible call returns an
//! [`EdqbdStatus`]; on failure the message is available from
//! [`edqbd_last_error`] until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use edqbd::config;
use edqbd::{Error, Evaluation, ModelParams, StationaryDistribution, ThetaCurve};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdqbdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unstable = 3,
    OutOfRange = 4,
    Numerical = 5,
    Panic = 6,
}

impl From<&Error> for EdqbdStatus {
    fn from(e: &Error) -> Self {
        match e.root() {
            Error::Unstable { .. } => EdqbdStatus::Unstable,
            Error::PhaseOutOfRange { .. } => EdqbdStatus::OutOfRange,
            Error::InvalidParam { .. }
            | Error::InfeasibleRatio { .. }
            | Error::Config(_)
            | Error::Json(_)
            | Error::Io { .. } => EdqbdStatus::InvalidArgument,
            _ => EdqbdStatus::Numerical,
        }
    }
}

/// Model parameters.
pub struct EdqbdParams(ModelParams);

/// Stationary distribution with its metrics and objective.
pub struct EdqbdSolution {
    dist: StationaryDistribution,
    eval: Evaluation,
}

/// Objective for every threshold `0..k`.
pub struct EdqbdThetaCurve(ThetaCurve);

/// Steady-state measures. Undefined delays are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EdqbdMetrics {
    pub e_nn: f64,
    pub e_nu: f64,
    pub e_nn_s: f64,
    pub e_nu_s: f64,
    pub lambda_n_eff: f64,
    pub e_wn: f64,
    pub e_wu: f64,
    pub p_balk: f64,
    pub p_band: f64,
    pub p_cap_loss: f64,
}

/// Revenue and cost rates per hour and the net benefit `z`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EdqbdObjective {
    pub r_u: f64,
    pub r_n_ed: f64,
    pub r_alt_rev: f64,
    pub b_cost: f64,
    pub w_n_cost: f64,
    pub w_u_cost: f64,
    pub z: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), EdqbdStatus>) -> EdqbdStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EdqbdStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            EdqbdStatus::Panic
        }
    }
}

fn fail(e: Error) -> EdqbdStatus {
    set_error(&e.to_string());
    EdqbdStatus::from(&e)
}

fn null(what: &str) -> EdqbdStatus {
    set_error(&format!("null pointer: {what}"));
    EdqbdStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, EdqbdStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        EdqbdStatus::InvalidArgument
    })
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, EdqbdStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, EdqbdStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn edqbd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn edqbd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn edqbd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a named preset (`rural`, `urban`, `nested-vs-fixed`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_params_preset(name: *const c_char, out: *mut *mut EdqbdParams) -> EdqbdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let p = ModelParams::preset(name).ok_or_else(|| fail(Error::Config(format!("unknown preset `{name}`"))))?;
        *out = boxed(EdqbdParams(p));
        Ok(())
    })
}

/// Parses a complete parameter record from JSON and validates it.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_params_from_json(json: *const c_char, out: *mut *mut EdqbdParams) -> EdqbdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let json = str_arg(json, "json")?;
        let p: ModelParams = serde_json::from_str(json).map_err(|e| fail(e.into()))?;
        p.validate().map_err(fail)?;
        *out = boxed(EdqbdParams(p));
        Ok(())
    })
}

/// Serializes parameters as JSON. Free the result with `edqbd_string_free`.
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_params_to_json(params: *const EdqbdParams, out: *mut *mut c_char) -> EdqbdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let p = handle(params, "params")?;
        let text = serde_json::to_string(&p.0).map_err(|e| fail(e.into()))?;
        *out = CString::new(text).map_err(|_| EdqbdStatus::Numerical)?.into_raw();
        Ok(())
    })
}

/// Sets one field from a JSON value, e.g. `("theta", "7")`. The handle is
/// unchanged if the result fails validation.
///
/// # Safety
/// `params` must be a live handle; `field` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn edqbd_params_set(
    params: *mut EdqbdParams,
    field: *const c_char,
    value: *const c_char,
) -> EdqbdStatus {
    guard(|| {
        let p = out_arg(params, "params")?;
        let field = str_arg(field, "field")?;
        let value = str_arg(value, "value")?;
        let (key, v) = config::parse_assignment(&format!("{field}={value}")).map_err(fail)?;
        let mut one = serde_json::Map::new();
        one.insert(key, v);
        let next = config::apply_overrides(&p.0, &one).map_err(fail)?;
        next.validate().map_err(fail)?;
        p.0 = next;
        Ok(())
    })
}

/// # Safety
/// `params` must be NULL or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn edqbd_params_free(params: *mut EdqbdParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Solves the chain and evaluates the policy at the handle's threshold.
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_solve(params: *const EdqbdParams, out: *mut *mut EdqbdSolution) -> EdqbdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let p = &handle(params, "params")?.0;
        let (_, dist) = edqbd::solve_params(p).map_err(fail)?;
        let eval = edqbd::metrics::evaluate_distribution(&dist, p).map_err(fail)?;
        *out = boxed(EdqbdSolution { dist, eval });
        Ok(())
    })
}

/// Stationary probability of `level` urgent and `phase` non-urgent patients.
///
/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_solution_pi(
    solution: *const EdqbdSolution,
    level: usize,
    phase: usize,
    out: *mut f64,
) -> EdqbdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = handle(solution, "solution")?;
        *out = s.dist.pi(level, phase).map_err(fail)?;
        Ok(())
    })
}

/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_solution_metrics(solution: *const EdqbdSolution, out: *mut EdqbdMetrics) -> EdqbdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = handle(solution, "solution")?.eval.metrics;
        *out = EdqbdMetrics {
            e_nn: m.e_nn,
            e_nu: m.e_nu,
            e_nn_s: m.e_nn_s,
            e_nu_s: m.e_nu_s,
            lambda_n_eff: m.lambda_n_eff,
            e_wn: m.e_wn.unwrap_or(f64::NAN),
            e_wu: m.e_wu.unwrap_or(f64::NAN),
            p_balk: m.p_balk,
            p_band: m.p_band,
            p_cap_loss: m.p_cap_loss,
        };
        Ok(())
    })
}

/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_solution_objective(
    solution: *const EdqbdSolution,
    out: *mut EdqbdObjective,
) -> EdqbdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let o = handle(solution, "solution")?.eval.objective;
        *out = EdqbdObjective {
            r_u: o.r_u,
            r_n_ed: o.r_n_ed,
            r_alt_rev: o.r_alt_rev,
            b_cost: o.b_cost,
            w_n_cost: o.w_n_cost,
            w_u_cost: o.w_u_cost,
            z: o.z,
        };
        Ok(())
    })
}

/// # Safety
/// `solution` must be NULL or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn edqbd_solution_free(solution: *mut EdqbdSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Evaluates every threshold; ties go to the smallest.
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_optimize_theta(
    params: *const EdqbdParams,
    out: *mut *mut EdqbdThetaCurve,
) -> EdqbdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let p = &handle(params, "params")?.0;
        *out = boxed(EdqbdThetaCurve(edqbd::optimize_theta(p).map_err(fail)?));
        Ok(())
    })
}

/// Number of thresholds on the curve (`k`).
///
/// # Safety
/// `curve` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn edqbd_curve_len(curve: *const EdqbdThetaCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.rows.len())
}

/// # Safety
/// `curve` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_curve_best(
    curve: *const EdqbdThetaCurve,
    theta_star: *mut u32,
    z_star: *mut f64,
) -> EdqbdStatus {
    guard(|| {
        let c = &handle(curve, "curve")?.0;
        *out_arg(theta_star, "theta_star")? = c.theta_star;
        *out_arg(z_star, "z_star")? = c.z_star;
        Ok(())
    })
}

/// Threshold and objective of row `index`.
///
/// # Safety
/// `curve` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn edqbd_curve_row(
    curve: *const EdqbdThetaCurve,
    index: usize,
    theta: *mut u32,
    z: *mut f64,
) -> EdqbdStatus {
    guard(|| {
        let c = &handle(curve, "curve")?.0;
        let row = c.rows.get(index).ok_or_else(|| {
            set_error(&format!("row {index} out of range 0..{}", c.rows.len()));
            EdqbdStatus::OutOfRange
        })?;
        *out_arg(theta, "theta")? = row.theta;
        *out_arg(z, "z")? = row.evaluation.objective.z;
        Ok(())
    })
}

/// # Safety
/// `curve` must be NULL or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn edqbd_curve_free(curve: *mut EdqbdThetaCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(edqbd_last_error()) }.to_str().unwrap().to_owned()
    }

    #[test]
    fn rural_round_trip() {
        unsafe {
            let mut p = ptr::null_mut();
            assert_eq!(edqbd_params_preset(c("rural").as_ptr(), &mut p), EdqbdStatus::Ok);
            let mut curve = ptr::null_mut();
            assert_eq!(edqbd_optimize_theta(p, &mut curve), EdqbdStatus::Ok);
            assert_eq!(edqbd_curve_len(curve), 37);
            let (mut theta, mut z) = (0u32, 0.0);
            assert_eq!(edqbd_curve_best(curve, &mut theta, &mut z), EdqbdStatus::Ok);
            assert_eq!(theta, 5);
            assert!((z - -27311.436).abs() < 1e-2);
            assert_eq!(edqbd_curve_row(curve, 37, &mut theta, &mut z), EdqbdStatus::OutOfRange);
            edqbd_curve_free(curve);

            let mut sol = ptr::null_mut();
            assert_eq!(edqbd_solve(p, &mut sol), EdqbdStatus::Ok);
            let mut obj = EdqbdObjective::default();
            assert_eq!(edqbd_solution_objective(sol, &mut obj), EdqbdStatus::Ok);
            assert!((obj.z - z).abs() < 1e-6 || theta != 5);
            let mut m = EdqbdMetrics::default();
            assert_eq!(edqbd_solution_metrics(sol, &mut m), EdqbdStatus::Ok);
            assert!(m.e_nn > 0.0 && m.p_balk >= 0.0);
            let mut pi = 0.0;
            assert_eq!(edqbd_solution_pi(sol, 0, 0, &mut pi), EdqbdStatus::Ok);
            assert!(pi > 0.0);
            assert_eq!(edqbd_solution_pi(sol, 0, 37, &mut pi), EdqbdStatus::OutOfRange);
            assert!(last_error().contains("phase"));
            edqbd_solution_free(sol);
            edqbd_params_free(p);
        }
    }

    #[test]
    fn set_and_json() {
        unsafe {
            let mut p = ptr::null_mut();
            assert_eq!(edqbd_params_preset(c("urban").as_ptr(), &mut p), EdqbdStatus::Ok);
            assert_eq!(edqbd_params_set(p, c("theta").as_ptr(), c("3").as_ptr()), EdqbdStatus::Ok);
            assert_eq!(edqbd_params_set(p, c("lambda").as_ptr(), c("-1").as_ptr()), EdqbdStatus::InvalidArgument);
            assert_eq!(edqbd_params_set(p, c("lambda").as_ptr(), c("500").as_ptr()), EdqbdStatus::Ok);
            let mut sol = ptr::null_mut();
            assert_eq!(edqbd_solve(p, &mut sol), EdqbdStatus::Unstable);
            assert!(sol.is_null());
            let mut base = ptr::null_mut();
            assert_eq!(edqbd_params_preset(c("urban").as_ptr(), &mut base), EdqbdStatus::Ok);
            (*p).0.lambda = (*base).0.lambda;
            edqbd_params_free(base);
            assert_eq!(edqbd_params_set(p, c("nope").as_ptr(), c("1").as_ptr()), EdqbdStatus::InvalidArgument);
            assert!(last_error().contains("nope"));
            let mut json = ptr::null_mut();
            assert_eq!(edqbd_params_to_json(p, &mut json), EdqbdStatus::Ok);
            let mut q = ptr::null_mut();
            assert_eq!(edqbd_params_from_json(json, &mut q), EdqbdStatus::Ok);
            assert_eq!((*q).0, (*p).0);
            assert_eq!((*q).0.theta, 3);
            edqbd_string_free(json);
            edqbd_params_free(q);
            edqbd_params_free(p);
        }
    }

    #[test]
    fn null_and_bad_input() {
        unsafe {
            let mut p = ptr::null_mut();
            assert_eq!(edqbd_params_preset(ptr::null(), &mut p), EdqbdStatus::NullPointer);
            assert!(p.is_null());
            assert_eq!(edqbd_params_preset(c("suburban").as_ptr(), &mut p), EdqbdStatus::InvalidArgument);
            assert_eq!(edqbd_params_from_json(c("{}").as_ptr(), &mut p), EdqbdStatus::InvalidArgument);
            let mut sol = ptr::null_mut();
            assert_eq!(edqbd_solve(ptr::null(), &mut sol), EdqbdStatus::NullPointer);
            assert_eq!(edqbd_curve_len(ptr::null()), 0);
            edqbd_params_free(ptr::null_mut());
            edqbd_solution_free(ptr::null_mut());
            assert_eq!(edqbd_params_preset(c("rural").as_ptr(), &mut p), EdqbdStatus::Ok);
            assert_eq!(last_error(), "");
            edqbd_params_free(p);
        }
    }
}
