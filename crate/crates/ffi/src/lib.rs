//! C interface to `jsymm`.
//!
//! Problems and results are opaque handles created and freed through this
//! API. Every fallible call returns a [`JsymmStatus`]; on failure the message
//! is available from [`jsymm_last_error`] on the same thread. Matrices are
//! dense and row-major.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jsymm::experiment::{run_solver, SolverKind, SolverSettings};
use jsymm::problems::{
    analytic_center_problem, bilinear_problem, generate_random_bilinear, generate_random_polytope,
    generate_random_quadratic, quadratic_problem, quartic_problem,
};
use jsymm::solvers::{SolveOutcome, SolveStatus};
use jsymm::update::{jsymm_inverse_update, jsymm_update};
use jsymm::{Error, MinimaxProblem, PrimalDualPoint, SecantPair, SplitDims};
use nalgebra::{DMatrix, DVector};

/// Return code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsymmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Domain = 4,
    Singular = 5,
    Diverged = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsymmSolver {
    Egm = 0,
    Broyden = 1,
    Jsymm = 2,
    JsymmLs = 3,
    JsymmTr = 4,
}

/// How a solve ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsymmOutcome {
    Converged = 0,
    Stationary = 1,
    MaxIterations = 2,
}

/// Solver settings. Obtain defaults from [`jsymm_solver_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct JsymmSolverOptions {
    pub tol_f: f64,
    pub max_iters: usize,
    /// Fixed stepsize for egm, broyden and jsymm.
    pub stepsize: f64,
    pub c1: f64,
    pub r0: f64,
    pub delta0: f64,
    pub zeta: f64,
    pub beta_hat: f64,
    pub tol_g: f64,
    pub seed: u64,
    /// Non-zero enables per-iteration invariant checks.
    pub strict_checks: i32,
    /// Non-zero allows jsymm-tr on domain-constrained problems.
    pub force_tr: i32,
}

/// Opaque minimax problem.
pub struct JsymmProblem {
    inner: Box<dyn MinimaxProblem>,
}

/// Opaque solve result.
pub struct JsymmResult {
    outcome: SolveOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> JsymmStatus {
    match err {
        Error::DimensionMismatch { .. } | Error::InvalidDims { .. } => {
            JsymmStatus::DimensionMismatch
        }
        Error::Domain => JsymmStatus::Domain,
        Error::SingularUpdate | Error::NearSingularDenominator { .. } | Error::ZeroStep { .. } => {
            JsymmStatus::Singular
        }
        Error::Diverged { .. } => JsymmStatus::Diverged,
        Error::Io(_) | Error::Parse { .. } | Error::Unsupported(_) => JsymmStatus::Io,
        _ => JsymmStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (JsymmStatus, String)>) -> JsymmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JsymmStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            JsymmStatus::Panic
        }
    }
}

fn lift(err: Error) -> (JsymmStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (JsymmStatus, String) {
    (JsymmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(
    p: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (JsymmStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(
    p: *mut f64,
    len: usize,
    what: &str,
) -> Result<&'a mut [f64], (JsymmStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn row_major(
    p: *const f64,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<DMatrix<f64>, (JsymmStatus, String)> {
    let data = slice(p, rows * cols, what)?;
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

fn write_row_major(mat: &DMatrix<f64>, out: &mut [f64]) {
    let cols = mat.ncols();
    for i in 0..mat.nrows() {
        for j in 0..cols {
            out[i * cols + j] = mat[(i, j)];
        }
    }
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), (JsymmStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn jsymm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jsymm_version() -> *const c_char {
    static VERSION: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(jsymm::version_string()).expect("no nul"))
        .as_ptr()
}

#[no_mangle]
pub extern "C" fn jsymm_solver_options_default() -> JsymmSolverOptions {
    let s = jsymm::solvers::SolverConfig::default();
    let t = jsymm::solvers::TrustRegionConfig::default();
    JsymmSolverOptions {
        tol_f: s.tol_f,
        max_iters: s.max_iters,
        stepsize: s.schedule.initial(),
        c1: s.c1,
        r0: t.r0,
        delta0: t.delta0,
        zeta: t.zeta,
        beta_hat: t.beta_hat,
        tol_g: t.tol_g,
        seed: 0,
        strict_checks: 0,
        force_tr: 0,
    }
}

/// Random convex-concave quadratic with `n` primal and `m` dual variables.
#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_quadratic_random(
    n: usize,
    m: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut JsymmProblem,
) -> JsymmStatus {
    guard(|| {
        let p = quadratic_problem(generate_random_quadratic(n, m, alpha, seed)).map_err(lift)?;
        emit(out, JsymmProblem { inner: Box::new(p) })
    })
}

/// Bilinear problem `L(x, y) = yᵀAx` with `A` given as an `m × n` row-major array.
#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_bilinear(
    a: *const f64,
    m: usize,
    n: usize,
    out: *mut *mut JsymmProblem,
) -> JsymmStatus {
    guard(|| {
        let a = row_major(a, m, n, "a")?;
        let p = bilinear_problem(a).map_err(lift)?;
        emit(out, JsymmProblem { inner: Box::new(p) })
    })
}

#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_bilinear_random(
    m: usize,
    n: usize,
    seed: u64,
    out: *mut *mut JsymmProblem,
) -> JsymmStatus {
    guard(|| {
        let p = bilinear_problem(generate_random_bilinear(m, n, seed)).map_err(lift)?;
        emit(out, JsymmProblem { inner: Box::new(p) })
    })
}

/// Analytic center of `{x : Ax <= b}` with `A` of size `m × n`, row-major.
#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_analytic_center(
    a: *const f64,
    b: *const f64,
    m: usize,
    n: usize,
    out: *mut *mut JsymmProblem,
) -> JsymmStatus {
    guard(|| {
        let a = row_major(a, m, n, "a")?;
        let b = DVector::from_column_slice(slice(b, m, "b")?);
        let p = analytic_center_problem(a, b).map_err(lift)?;
        emit(out, JsymmProblem { inner: Box::new(p) })
    })
}

#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_analytic_center_random(
    n: usize,
    m: usize,
    seed: u64,
    out: *mut *mut JsymmProblem,
) -> JsymmStatus {
    guard(|| {
        let (a, b) = generate_random_polytope(n, m, seed).map_err(lift)?;
        let p = analytic_center_problem(a, b).map_err(lift)?;
        emit(out, JsymmProblem { inner: Box::new(p) })
    })
}

/// Two-dimensional quartic with interaction coefficient `a`.
#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_quartic(a: f64, out: *mut *mut JsymmProblem) -> JsymmStatus {
    guard(|| {
        emit(
            out,
            JsymmProblem {
                inner: Box::new(quartic_problem(a)),
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_free(problem: *mut JsymmProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Primal and dual block sizes. The total dimension is `*n + *m`.
#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_dims(
    problem: *const JsymmProblem,
    n: *mut usize,
    m: *mut usize,
) -> JsymmStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if n.is_null() || m.is_null() {
            return Err(null("output"));
        }
        let d = p.inner.dims();
        *n = d.primal();
        *m = d.dual();
        Ok(())
    })
}

unsafe fn point(
    p: &JsymmProblem,
    z: *const f64,
    len: usize,
) -> Result<DVector<f64>, (JsymmStatus, String)> {
    let total = p.inner.dims().total();
    if len != total {
        return Err(lift(Error::DimensionMismatch {
            expected: total,
            found: len,
        }));
    }
    Ok(DVector::from_column_slice(slice(z, len, "z")?))
}

/// Writes `F(z)` into `out` (length `len`).
#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_eval_f(
    problem: *const JsymmProblem,
    z: *const f64,
    len: usize,
    out: *mut f64,
) -> JsymmStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let z = point(p, z, len)?;
        let f = p.inner.eval_f(&z).map_err(lift)?;
        slice_mut(out, len, "out")?.copy_from_slice(f.as_slice());
        Ok(())
    })
}

/// Writes the `len × len` Jacobian at `z` into `out`, row-major.
#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_eval_jacobian(
    problem: *const JsymmProblem,
    z: *const f64,
    len: usize,
    out: *mut f64,
) -> JsymmStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let z = point(p, z, len)?;
        let jac = p.inner.eval_jacobian(&z).map_err(lift)?;
        write_row_major(&jac, slice_mut(out, len * len, "out")?);
        Ok(())
    })
}

/// Writes the problem's natural starting point (the origin unless the
/// problem has an interior preset).
#[no_mangle]
pub unsafe extern "C" fn jsymm_problem_default_start(
    problem: *const JsymmProblem,
    out: *mut f64,
    len: usize,
) -> JsymmStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let total = p.inner.dims().total();
        if len != total {
            return Err(lift(Error::DimensionMismatch {
                expected: total,
                found: len,
            }));
        }
        let out = slice_mut(out, len, "out")?;
        match p.inner.default_start() {
            Some(z) => out.copy_from_slice(z.values().as_slice()),
            None => out.fill(0.0),
        }
        Ok(())
    })
}

fn solver_kind(s: JsymmSolver) -> SolverKind {
    match s {
        JsymmSolver::Egm => SolverKind::Egm,
        JsymmSolver::Broyden => SolverKind::Broyden,
        JsymmSolver::Jsymm => SolverKind::Jsymm,
        JsymmSolver::JsymmLs => SolverKind::JsymmLs,
        JsymmSolver::JsymmTr => SolverKind::JsymmTr,
    }
}

/// Runs `solver` from `z0`. `options` may be NULL for defaults. On success
/// `*out` owns a result that must be released with [`jsymm_result_free`].
#[no_mangle]
pub unsafe extern "C" fn jsymm_solve(
    problem: *const JsymmProblem,
    solver: JsymmSolver,
    z0: *const f64,
    len: usize,
    options: *const JsymmSolverOptions,
    out: *mut *mut JsymmResult,
) -> JsymmStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| jsymm_solver_options_default());
        let z = PrimalDualPoint::new(point(p, z0, len)?, p.inner.dims()).map_err(lift)?;
        let settings = SolverSettings {
            tol: Some(opts.tol_f),
            max_iters: Some(opts.max_iters),
            stepsize: Some(opts.stepsize),
            schedule: None,
            c1: Some(opts.c1),
            r0: Some(opts.r0),
            delta0: Some(opts.delta0),
            zeta: Some(opts.zeta),
            beta_hat: Some(opts.beta_hat),
            tol_g: Some(opts.tol_g),
            strict_checks: opts.strict_checks != 0,
            record_timing: false,
        };
        let outcome = run_solver(
            p.inner.as_ref(),
            solver_kind(solver),
            &z,
            &settings,
            opts.seed,
            opts.force_tr != 0,
        )
        .map_err(lift)?;
        emit(out, JsymmResult { outcome })
    })
}

#[no_mangle]
pub unsafe extern "C" fn jsymm_result_free(result: *mut JsymmResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Termination reason; `MaxIterations` for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn jsymm_result_outcome(result: *const JsymmResult) -> JsymmOutcome {
    match result.as_ref().map(|r| r.outcome.status) {
        Some(SolveStatus::Converged) => JsymmOutcome::Converged,
        Some(SolveStatus::Stationary) => JsymmOutcome::Stationary,
        _ => JsymmOutcome::MaxIterations,
    }
}

/// Iterations performed; 0 for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn jsymm_result_iterations(result: *const JsymmResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.iterations())
}

/// `‖F‖` at the final iterate; NaN for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn jsymm_result_final_norm_f(result: *const JsymmResult) -> f64 {
    result
        .as_ref()
        .map_or(f64::NAN, |r| r.outcome.final_norm_f())
}

/// Copies the final iterate into `out` (length `len`, the problem dimension).
#[no_mangle]
pub unsafe extern "C" fn jsymm_result_point(
    result: *const JsymmResult,
    out: *mut f64,
    len: usize,
) -> JsymmStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let z = r.outcome.z.values();
        if len != z.len() {
            return Err(lift(Error::DimensionMismatch {
                expected: z.len(),
                found: len,
            }));
        }
        slice_mut(out, len, "out")?.copy_from_slice(z.as_slice());
        Ok(())
    })
}

/// Number of trace records (iterations + 1).
#[no_mangle]
pub unsafe extern "C" fn jsymm_result_trace_len(result: *const JsymmResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.trace.records.len())
}

/// Copies `‖F‖` of every trace record into `out` (length `len`, equal to
/// [`jsymm_result_trace_len`]).
#[no_mangle]
pub unsafe extern "C" fn jsymm_result_trace_norm_f(
    result: *const JsymmResult,
    out: *mut f64,
    len: usize,
) -> JsymmStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let records = &r.outcome.trace.records;
        if len != records.len() {
            return Err(lift(Error::DimensionMismatch {
                expected: records.len(),
                found: len,
            }));
        }
        for (dst, rec) in slice_mut(out, len, "out")?.iter_mut().zip(records) {
            *dst = rec.norm_f;
        }
        Ok(())
    })
}

unsafe fn pair_and_dims(
    s: *const f64,
    y: *const f64,
    n: usize,
    m: usize,
) -> Result<(SecantPair, SplitDims), (JsymmStatus, String)> {
    let dims = SplitDims::new(n, m).map_err(lift)?;
    let d = dims.total();
    let s = DVector::from_column_slice(slice(s, d, "s")?);
    let y = DVector::from_column_slice(slice(y, d, "y")?);
    Ok((SecantPair::new(s, y).map_err(lift)?, dims))
}

/// J-symmetric least-change update of the `(n+m) × (n+m)` row-major `b`
/// with secant pair `(s, y)`, written to `out`.
#[no_mangle]
pub unsafe extern "C" fn jsymm_update_jacobian(
    b: *const f64,
    s: *const f64,
    y: *const f64,
    n: usize,
    m: usize,
    out: *mut f64,
) -> JsymmStatus {
    guard(|| {
        let (pair, dims) = pair_and_dims(s, y, n, m)?;
        let d = dims.total();
        let b = row_major(b, d, d, "b")?;
        let updated = jsymm_update(&b, &pair, dims).map_err(lift)?;
        write_row_major(&updated, slice_mut(out, d * d, "out")?);
        Ok(())
    })
}

/// Inverse of the J-symmetric update: given `h = b⁻¹`, writes `(b⁺)⁻¹` to
/// `out`. Returns `JSYMM_STATUS_SINGULAR` when the low-rank formula breaks
/// down.
#[no_mangle]
pub unsafe extern "C" fn jsymm_update_inverse(
    h: *const f64,
    b: *const f64,
    s: *const f64,
    y: *const f64,
    n: usize,
    m: usize,
    out: *mut f64,
) -> JsymmStatus {
    guard(|| {
        let (pair, dims) = pair_and_dims(s, y, n, m)?;
        let d = dims.total();
        let h = row_major(h, d, d, "h")?;
        let b = row_major(b, d, d, "b")?;
        let updated = jsymm_inverse_update(&h, &b, &pair, dims).map_err(lift)?;
        write_row_major(&updated, slice_mut(out, d * d, "out")?);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_round_trip() {
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mat = unsafe { row_major(data.as_ptr(), 2, 3, "a").unwrap() };
        assert_eq!(mat[(0, 2)], 3.0);
        assert_eq!(mat[(1, 0)], 4.0);
        let mut out = [0.0; 6];
        write_row_major(&mat, &mut out);
        assert_eq!(out, data);
    }

    #[test]
    fn error_message_is_thread_local() {
        let status = unsafe { jsymm_problem_quartic(1.0, ptr::null_mut()) };
        assert_eq!(status, JsymmStatus::NullPointer);
        assert!(!jsymm_last_error().is_null());
        let other = std::thread::spawn(|| jsymm_last_error().is_null())
            .join()
            .unwrap();
        assert!(other);
    }
}
