//! C interface to `blockreg`.
//!
//! Every fallible function returns a [`BlockregStatus`]; on failure the
//! message is available from [`blockreg_last_error`] on the same thread.
//! Objects created by `*_new`/`*_solve` calls are opaque and must be
//! released with the matching `*_free`. Output buffers are caller-owned.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use blockreg::signals;
use blockreg::solver::{self, LopAltProblem, Loss, SolveReport, SolverParams};
use blockreg::{prox, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockregStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    Parameter = 3,
    Divergence = 4,
    NotInvertible = 5,
    ZeroSignal = 6,
    Format = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockregLoss {
    Quadratic = 0,
    Absolute = 1,
}

impl From<BlockregLoss> for Loss {
    fn from(l: BlockregLoss) -> Self {
        match l {
            BlockregLoss::Quadratic => Loss::Quadratic,
            BlockregLoss::Absolute => Loss::Absolute,
        }
    }
}

/// Step sizes and stopping budget; mirrors the Rust `SolverParams`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockregSolverParams {
    pub tau1: f64,
    pub tau2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl From<SolverParams> for BlockregSolverParams {
    fn from(p: SolverParams) -> Self {
        Self {
            tau1: p.tau1,
            tau2: p.tau2,
            mu1: p.mu1,
            mu2: p.mu2,
            mu3: p.mu3,
            max_iter: p.max_iter,
            tol: p.tol,
            seed: p.seed,
        }
    }
}

impl From<BlockregSolverParams> for SolverParams {
    fn from(p: BlockregSolverParams) -> Self {
        Self {
            tau1: p.tau1,
            tau2: p.tau2,
            mu1: p.mu1,
            mu2: p.mu2,
            mu3: p.mu3,
            max_iter: p.max_iter,
            tol: p.tol,
            seed: p.seed,
        }
    }
}

/// A denoising problem: data, operators, loss and hyperparameters.
pub struct BlockregProblem {
    inner: LopAltProblem,
}

/// Result of [`blockreg_solve`].
pub struct BlockregReport {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> BlockregStatus {
    match err {
        Error::Dimension(_) => BlockregStatus::Dimension,
        Error::Parameter(_) => BlockregStatus::Parameter,
        Error::Divergence { .. } => BlockregStatus::Divergence,
        Error::NotInvertible(_) => BlockregStatus::NotInvertible,
        Error::ZeroSignal => BlockregStatus::ZeroSignal,
        Error::Format(_) => BlockregStatus::Format,
        Error::Io(_) => BlockregStatus::Io,
    }
}

struct Fail(BlockregStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BlockregStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, converting errors and panics to a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BlockregStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BlockregStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BlockregStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write_scalar<T>(p: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn copy_out(src: &[f64], dst: &mut [f64]) -> Result<(), Fail> {
    if dst.len() < src.len() {
        return Err(Fail(
            BlockregStatus::BufferTooSmall,
            format!("buffer holds {} values, {} needed", dst.len(), src.len()),
        ));
    }
    dst[..src.len()].copy_from_slice(src);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length, or 0
/// when there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn blockreg_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
        None => 0,
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn blockreg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// 1D denoising problem on `y[0..n]`. `alpha` may be `INFINITY`.
///
/// # Safety
/// `y` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn blockreg_problem_denoise_1d(
    y: *const f64,
    n: usize,
    loss: BlockregLoss,
    lambda: f64,
    alpha: f64,
    out: *mut *mut BlockregProblem,
) -> BlockregStatus {
    guard(|| {
        let y = input(y, n, "y")?.to_vec();
        let p = LopAltProblem::denoise_1d(y, loss.into(), lambda, alpha)?;
        write_scalar(
            out,
            Box::into_raw(Box::new(BlockregProblem { inner: p })),
            "out",
        )
    })
}

/// 2D denoising problem on a row-major `height x width` image.
///
/// # Safety
/// `pixels` must point to `height * width` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn blockreg_problem_denoise_2d(
    pixels: *const f64,
    height: usize,
    width: usize,
    loss: BlockregLoss,
    lambda: f64,
    alpha: f64,
    out: *mut *mut BlockregProblem,
) -> BlockregStatus {
    guard(|| {
        let len = height
            .checked_mul(width)
            .ok_or_else(|| Fail(BlockregStatus::Dimension, "image size overflows".into()))?;
        let px = input(pixels, len, "pixels")?.to_vec();
        let p = LopAltProblem::denoise_2d(px, height, width, loss.into(), lambda, alpha)?;
        write_scalar(
            out,
            Box::into_raw(Box::new(BlockregProblem { inner: p })),
            "out",
        )
    })
}

/// # Safety
/// `problem` must be null or come from a `blockreg_problem_*` constructor
/// and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn blockreg_problem_free(problem: *mut BlockregProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Length of the unknown `x`.
///
/// # Safety
/// `problem` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn blockreg_problem_len(problem: *const BlockregProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.layout().n)
}

/// Default step sizes for `problem`.
///
/// # Safety
/// `problem` must be a live problem handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn blockreg_params_for_problem(
    problem: *const BlockregProblem,
    out: *mut BlockregSolverParams,
) -> BlockregStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let params = SolverParams::for_problem(&p.inner)?;
        write_scalar(out, params.into(), "out")
    })
}

/// Solves `problem`. `params` may be null for the defaults.
///
/// # Safety
/// `problem` must be a live problem handle, `params` null or readable, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn blockreg_solve(
    problem: *const BlockregProblem,
    params: *const BlockregSolverParams,
    out: *mut *mut BlockregReport,
) -> BlockregStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let params = match params.as_ref() {
            Some(q) => SolverParams::from(*q),
            None => SolverParams::for_problem(&p.inner)?,
        };
        let rep = solver::solve(&p.inner, &params, None)?;
        write_scalar(
            out,
            Box::into_raw(Box::new(BlockregReport { inner: rep })),
            "out",
        )
    })
}

/// # Safety
/// `report` must be null or come from [`blockreg_solve`] and not have been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn blockreg_report_free(report: *mut BlockregReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Copies `x̂` into `buf`, which must hold [`blockreg_problem_len`] values.
///
/// # Safety
/// `report` must be a live report; `buf` must point to `len` writable
/// values.
#[no_mangle]
pub unsafe extern "C" fn blockreg_report_x(
    report: *const BlockregReport,
    buf: *mut f64,
    len: usize,
) -> BlockregStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        copy_out(&r.inner.x_hat, output(buf, len, "buf")?)
    })
}

/// Length of `σ̂`.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn blockreg_report_sigma_len(report: *const BlockregReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.sigma_hat.len())
}

/// Copies `σ̂` into `buf`.
///
/// # Safety
/// `report` must be a live report; `buf` must point to `len` writable
/// values.
#[no_mangle]
pub unsafe extern "C" fn blockreg_report_sigma(
    report: *const BlockregReport,
    buf: *mut f64,
    len: usize,
) -> BlockregStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        copy_out(&r.inner.sigma_hat, output(buf, len, "buf")?)
    })
}

/// Iterations run, whether the stopping rule was met, and the last value of
/// the objective trace. Any out pointer may be null.
///
/// # Safety
/// `report` must be a live report; non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn blockreg_report_summary(
    report: *const BlockregReport,
    iterations: *mut usize,
    converged: *mut bool,
    objective: *mut f64,
) -> BlockregStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.inner;
        if !iterations.is_null() {
            iterations.write(r.iterations);
        }
        if !converged.is_null() {
            converged.write(r.converged);
        }
        if !objective.is_null() {
            objective.write(r.objective_trace.last().copied().unwrap_or(f64::NAN));
        }
        Ok(())
    })
}

/// `f(Lx) + λ Ψ_α(Rx)` with the inner problem solved to `tol`.
///
/// # Safety
/// `problem` must be a live handle, `x` must point to `n` values and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn blockreg_objective(
    problem: *const BlockregProblem,
    x: *const f64,
    n: usize,
    tol: f64,
    out: *mut f64,
) -> BlockregStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let v = p.inner.objective(input(x, n, "x")?, tol)?;
        write_scalar(out, v, "out")
    })
}

/// Joint prox of `γ φ` at `(v_tilde, sigma_tilde)`.
///
/// # Safety
/// `v_out` and `sigma_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn blockreg_prox_perspective(
    v_tilde: f64,
    sigma_tilde: f64,
    gamma: f64,
    v_out: *mut f64,
    sigma_out: *mut f64,
) -> BlockregStatus {
    guard(|| {
        let (v, s) = prox::prox_perspective(v_tilde, sigma_tilde, gamma)?;
        write_scalar(v_out, v, "v_out")?;
        write_scalar(sigma_out, s, "sigma_out")
    })
}

/// Euclidean projection of `eta[0..n]` onto the ℓ1 ball of radius `alpha`.
/// `out` may alias `eta`.
///
/// # Safety
/// `eta` must point to `n` readable and `out` to `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn blockreg_project_l1_ball(
    eta: *const f64,
    n: usize,
    alpha: f64,
    out: *mut f64,
) -> BlockregStatus {
    guard(|| {
        let p = prox::project_l1_ball(input(eta, n, "eta")?, alpha)?;
        copy_out(&p, output(out, n, "out")?)
    })
}

/// `Ψ_α(z)` with the 1D difference acting on `σ`.
///
/// # Safety
/// `z` must point to `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn blockreg_penalty_1d(
    z: *const f64,
    n: usize,
    alpha: f64,
    tol: f64,
    out: *mut f64,
) -> BlockregStatus {
    guard(|| {
        let d = blockreg::linops::make_diff_1d(n)?;
        let v = solver::evaluate_penalty(input(z, n, "z")?, alpha, &d, tol)?;
        write_scalar(out, v, "out")
    })
}

/// Exact 1D total-variation denoising, `out` may alias `y`.
///
/// # Safety
/// `y` must point to `n` readable and `out` to `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn blockreg_tv_1d(
    y: *const f64,
    n: usize,
    lambda: f64,
    out: *mut f64,
) -> BlockregStatus {
    guard(|| {
        if !(lambda >= 0.0) {
            return Err(Fail(
                BlockregStatus::Parameter,
                format!("lambda must be >= 0, got {lambda}"),
            ));
        }
        let x = solver::taut_string_tv_1d(input(y, n, "y")?, lambda);
        copy_out(&x, output(out, n, "out")?)
    })
}

/// Cantor function sampled at `n` points.
///
/// # Safety
/// `out` must point to `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn blockreg_cantor(n: usize, depth: u32, out: *mut f64) -> BlockregStatus {
    guard(|| {
        let x = signals::cantor_signal(n, depth)?;
        copy_out(&x, output(out, n, "out")?)
    })
}

/// `x` plus seeded Gaussian noise at exactly `snr_db`.
///
/// # Safety
/// `x` must point to `n` readable and `out` to `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn blockreg_add_awgn(
    x: *const f64,
    n: usize,
    snr_db: f64,
    seed: u64,
    out: *mut f64,
) -> BlockregStatus {
    guard(|| {
        let y = signals::add_awgn(input(x, n, "x")?, snr_db, seed)?;
        copy_out(&y, output(out, n, "out")?)
    })
}

/// SNR of `x_hat` against `x` in dB; `INFINITY` for an exact match.
///
/// # Safety
/// `x` and `x_hat` must point to `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn blockreg_snr(
    x: *const f64,
    x_hat: *const f64,
    n: usize,
    out: *mut f64,
) -> BlockregStatus {
    guard(|| {
        let v = signals::snr(input(x, n, "x")?, input(x_hat, n, "x_hat")?)?;
        write_scalar(out, v, "out")
    })
}
