//! C ABI over the ridge-sketch solver.
//!
//! Problems and reports are opaque handles owned by the caller and released
//! with their `*_free` function. Every fallible call returns an [`RsStatus`];
//! on failure [`rs_last_error_message`] describes the cause for the calling
//! thread. Matrices are passed dense and row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use ridge_sketch::dual::solve_underdetermined;
use ridge_sketch::problem::{effective_dimension, Orientation};
use ridge_sketch::sketch::SketchKind;
use ridge_sketch::solver::{adaptive_solve, SolveReport, SolverConfig, SolverMode};
use ridge_sketch::{direct_solve, Error, ProblemInstance};

/// Outcome of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    OutOfValidityRange = 3,
    Shape = 4,
    SketchTooLarge = 5,
    NumericalBreakdown = 6,
    RankDeficient = 7,
    Infeasible = 8,
    Io = 9,
    Parse = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsSketch {
    Gaussian = 0,
    Srht = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsMode {
    PolyakThenGradient = 0,
    GradientOnly = 1,
}

/// Solver settings; obtain defaults from [`rs_solver_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RsSolverOptions {
    pub sketch: RsSketch,
    pub mode: RsMode,
    pub rho: f64,
    pub eta: f64,
    pub eps: f64,
    pub m_initial: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Non-zero accepts Gaussian settings outside the stated range.
    pub permissive: u8,
}

/// Opaque regularized least-squares instance.
pub struct RsProblem {
    inner: ProblemInstance,
}

/// Opaque result of a solve.
pub struct RsReport {
    x: DVector<f64>,
    iterations: usize,
    rejections: usize,
    final_m: usize,
    converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RsStatus {
    match e {
        Error::InvalidInput(_) => RsStatus::InvalidInput,
        Error::OutOfValidityRange { .. } => RsStatus::OutOfValidityRange,
        Error::SketchTooLarge { .. } | Error::SketchExhausted { .. } => RsStatus::SketchTooLarge,
        Error::NumericalBreakdown(_) => RsStatus::NumericalBreakdown,
        Error::RankDeficient { .. } => RsStatus::RankDeficient,
        Error::InfeasibleAtDeskScale(_) => RsStatus::Infeasible,
        Error::Parse { .. } => RsStatus::Parse,
        Error::Shape(_) => RsStatus::Shape,
        Error::Io(_) => RsStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into a status plus a message.
fn guard(f: impl FnOnce() -> Result<(), (RsStatus, String)>) -> RsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside ridge-sketch".into());
            RsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (RsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RsStatus, String) {
    (RsStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a problem from a row-major `n x d` matrix `a`, a length-`n`
/// vector `b` and the regularization `nu > 0`.
///
/// # Safety
/// `a` must point to `n * d` doubles, `b` to `n` doubles, and `out` to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_problem_new(
    a: *const f64,
    n: usize,
    d: usize,
    b: *const f64,
    nu: f64,
    out: *mut *mut RsProblem,
) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if a.is_null() || b.is_null() {
            return Err(null("data"));
        }
        let len = n.checked_mul(d).ok_or((RsStatus::Shape, "n * d overflows".to_string()))?;
        let a = DMatrix::from_row_slice(n, d, std::slice::from_raw_parts(a, len));
        let b = DVector::from_column_slice(std::slice::from_raw_parts(b, n));
        let inner = ProblemInstance::from_shape(a, b, nu).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RsProblem { inner }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`rs_problem_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rs_problem_free(problem: *mut RsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of unknowns `d`, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_problem_dim(problem: *const RsProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.d())
}

/// Effective dimension `|D|_F^2 / |D|_2^2` of the problem.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rs_problem_effective_dimension(
    problem: *const RsProblem,
    out: *mut f64,
) -> RsStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sigma: Vec<f64> = p.inner.oracle().map_err(lib_err)?.sigma().iter().copied().collect();
        *out = effective_dimension(&sigma, p.inner.nu()).map_err(lib_err)?;
        Ok(())
    })
}

/// Exact solution written to `x` (capacity `len >= d`).
///
/// # Safety
/// `problem` must be a live handle and `x` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rs_direct_solve(
    problem: *const RsProblem,
    x: *mut f64,
    len: usize,
) -> RsStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let sol = direct_solve(&p.inner).map_err(lib_err)?;
        copy_out(&sol, x, len)
    })
}

unsafe fn copy_out(v: &DVector<f64>, dst: *mut f64, len: usize) -> Result<(), (RsStatus, String)> {
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    if len < v.len() {
        return Err((
            RsStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", v.len()),
        ));
    }
    std::slice::from_raw_parts_mut(dst, v.len()).copy_from_slice(v.as_slice());
    Ok(())
}

#[no_mangle]
pub extern "C" fn rs_solver_options_default() -> RsSolverOptions {
    let cfg = SolverConfig::default();
    RsSolverOptions {
        sketch: RsSketch::Srht,
        mode: RsMode::PolyakThenGradient,
        rho: cfg.rho,
        eta: cfg.eta,
        eps: cfg.eps,
        m_initial: cfg.m_initial,
        max_iters: cfg.max_iters,
        seed: cfg.seed,
        permissive: 0,
    }
}

fn config_of(o: &RsSolverOptions) -> SolverConfig {
    SolverConfig {
        rho: o.rho,
        eta: o.eta,
        eps: o.eps,
        m_initial: o.m_initial,
        max_iters: o.max_iters,
        seed: o.seed,
        permissive: o.permissive != 0,
        sketch_kind: match o.sketch {
            RsSketch::Gaussian => SketchKind::Gaussian,
            RsSketch::Srht => SketchKind::Srht,
        },
        mode: match o.mode {
            RsMode::PolyakThenGradient => SolverMode::PolyakThenGradient,
            RsMode::GradientOnly => SolverMode::GradientOnly,
        },
        ..SolverConfig::default()
    }
}

fn report_of(rep: SolveReport, x: DVector<f64>) -> RsReport {
    RsReport {
        x,
        iterations: rep.iterations,
        rejections: rep.rejections,
        final_m: rep.final_m,
        converged: rep.converged,
    }
}

/// Runs the adaptive solver; wide problems go through the dual. `options`
/// may be null for the defaults. A solve that stops without converging
/// still returns `RS_STATUS_OK`; check [`rs_report_converged`].
///
/// # Safety
/// `problem` must be a live handle, `options` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rs_solve(
    problem: *const RsProblem,
    options: *const RsSolverOptions,
    out: *mut *mut RsReport,
) -> RsStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = options.as_ref().copied().unwrap_or_else(|| rs_solver_options_default());
        let cfg = config_of(&opts);
        let report = match p.inner.orientation() {
            Orientation::Overdetermined => {
                let rep = adaptive_solve(&p.inner, &cfg).map_err(lib_err)?;
                let x = rep.x.clone();
                report_of(rep, x)
            }
            Orientation::Underdetermined => {
                let rep = solve_underdetermined(&p.inner, &cfg).map_err(lib_err)?;
                report_of(rep.dual, rep.x)
            }
        };
        *out = Box::into_raw(Box::new(report));
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`rs_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rs_report_free(report: *mut RsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Copies the solution into `x` (capacity `len`).
///
/// # Safety
/// `report` must be a live handle and `x` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rs_report_x(report: *const RsReport, x: *mut f64, len: usize) -> RsStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        copy_out(&r.x, x, len)
    })
}

/// Length of the solution vector, 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_report_dim(report: *const RsReport) -> usize {
    report.as_ref().map_or(0, |r| r.x.len())
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_report_iterations(report: *const RsReport) -> usize {
    report.as_ref().map_or(0, |r| r.iterations)
}

/// Number of rejected steps (sketch doublings).
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_report_rejections(report: *const RsReport) -> usize {
    report.as_ref().map_or(0, |r| r.rejections)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_report_final_m(report: *const RsReport) -> usize {
    report.as_ref().map_or(0, |r| r.final_m)
}

/// 1 when the stopping rule was met, 0 otherwise or for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_report_converged(report: *const RsReport) -> u8 {
    report.as_ref().map_or(0, |r| r.converged as u8)
}
