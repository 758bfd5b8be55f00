//! C interface to the `gke` library.
//!
//! Ensembles and solutions are opaque handles owned by the caller and freed
//! with their `_free` function. Every fallible call returns a [`GkeStatus`];
//! the message of the last failure on the calling thread is available from
//! [`gke_last_error_message`]. Matrices cross the boundary as row-major
//! arrays of interleaved `(re, im)` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gke::cli::{generate_ensemble, EnsembleFile};
use gke::verify::{build_instance, Recipe};
use gke::{
    kantorovich_constant, run_check, solve_gke, CMatrix, CheckId, Generator, GkeError,
    MatrixEnsemble, PositiveDefiniteMatrix, SolveReport, SolverOptions, C64,
};


/// Result codes of the C interface.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GkeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotHermitian = 3,
    NotPositiveDefinite = 4,
    DimensionMismatch = 5,
    NotConverged = 6,
    Numerical = 7,
    Parse = 8,
    Panic = 9,
}

/// Opaque weighted ensemble of positive definite matrices.
pub struct GkeEnsemble {
    inner: MatrixEnsemble,
}

/// Opaque result of a solve.
pub struct GkeSolution {
    report: SolveReport,
}

/// Outcome of one inequality check.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct GkeCheckOutcome {
    /// 1 when every link of the check holds, 0 otherwise.
    pub holds: c_int,
    /// Smallest scale-relative margin over the links.
    pub margin: f64,
    /// Largest tolerance applied to a link.
    pub tolerance: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &GkeError) -> GkeStatus {
    match err {
        GkeError::NotHermitian { .. } => GkeStatus::NotHermitian,
        GkeError::NotPositiveDefinite { .. } => GkeStatus::NotPositiveDefinite,
        GkeError::DimensionMismatch { .. } => GkeStatus::DimensionMismatch,
        GkeError::Solver(_) => GkeStatus::NotConverged,
        GkeError::EigenNonConvergence { .. } | GkeError::Domain { .. } | GkeError::Singular { .. } => {
            GkeStatus::Numerical
        }
        GkeError::Parse(_) => GkeStatus::Parse,
        GkeError::Range(_)
        | GkeError::Precondition(_)
        | GkeError::InvalidWeights(_)
        | GkeError::Config(_)
        | GkeError::Io(_) => GkeStatus::InvalidArgument,
    }
}

fn fail(status: GkeStatus, msg: impl Into<String>) -> GkeStatus {
    set_last_error(msg);
    status
}

/// Runs `body`, recording errors and turning panics into [`GkeStatus::Panic`].
fn guard(body: impl FnOnce() -> Result<(), GkeStatus>) -> GkeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GkeStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(GkeStatus::Panic, "internal panic"),
    }
}

fn lib_err(err: GkeError) -> GkeStatus {
    fail(status_of(&err), err.to_string())
}

fn null_err(what: &str) -> GkeStatus {
    fail(GkeStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, GkeStatus> {
    if s.is_null() {
        return Err(null_err(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(GkeStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Builds an ensemble from `count` matrices of size `dim`.
///
/// `data` holds `count * dim * dim` complex entries as interleaved doubles.
/// `weights` may be null for uniform weights, otherwise it holds `count`
/// values summing to one.
///
/// # Safety
/// `data` must point to `2 * count * dim * dim` readable doubles, `weights`
/// to `count` doubles when non-null, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gke_ensemble_new(
    dim: usize,
    count: usize,
    data: *const f64,
    weights: *const f64,
    out: *mut *mut GkeEnsemble,
) -> GkeStatus {
    guard(|| {
        if data.is_null() {
            return Err(null_err("data"));
        }
        if out.is_null() {
            return Err(null_err("out"));
        }
        if dim == 0 || count == 0 {
            return Err(fail(GkeStatus::InvalidArgument, "dim and count must be positive"));
        }
        let per = dim * dim;
        let raw = std::slice::from_raw_parts(data, 2 * per * count);
        let mut mats = Vec::with_capacity(count);
        for chunk in raw.chunks_exact(2 * per) {
            let m = CMatrix::from_row_iterator(
                dim,
                dim,
                chunk.chunks_exact(2).map(|c| C64::new(c[0], c[1])),
            );
            mats.push(PositiveDefiniteMatrix::from_matrix(m).map_err(lib_err)?);
        }
        let ensemble = if weights.is_null() {
            MatrixEnsemble::uniform(mats)
        } else {
            MatrixEnsemble::new(mats, std::slice::from_raw_parts(weights, count).to_vec())
        }
        .map_err(lib_err)?;
        write_out(out, GkeEnsemble { inner: ensemble });
        Ok(())
    })
}

/// Draws a seeded random ensemble with spectra in `[lower, upper]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gke_ensemble_generate(
    dim: usize,
    count: usize,
    lower: f64,
    upper: f64,
    seed: u64,
    out: *mut *mut GkeEnsemble,
) -> GkeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let e = generate_ensemble(dim, count, lower, upper, seed).map_err(lib_err)?;
        write_out(out, GkeEnsemble { inner: e });
        Ok(())
    })
}

/// Parses an ensemble from the JSON ensemble file format.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gke_ensemble_from_json(
    json: *const c_char,
    out: *mut *mut GkeEnsemble,
) -> GkeStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let e = EnsembleFile::parse(text)
            .and_then(|f| f.to_ensemble())
            .map_err(lib_err)?;
        write_out(out, GkeEnsemble { inner: e });
        Ok(())
    })
}

/// Serializes an ensemble; free the string with [`gke_string_free`].
///
/// # Safety
/// `ensemble` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gke_ensemble_to_json(
    ensemble: *const GkeEnsemble,
    out: *mut *mut c_char,
) -> GkeStatus {
    guard(|| {
        let e = ensemble.as_ref().ok_or_else(|| null_err("ensemble"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let text = EnsembleFile::from_ensemble(&e.inner).render();
        let c = CString::new(text).map_err(|_| fail(GkeStatus::Panic, "NUL in JSON output"))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Matrix size of the ensemble, or 0 for a null handle.
///
/// # Safety
/// `ensemble` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gke_ensemble_dim(ensemble: *const GkeEnsemble) -> usize {
    ensemble.as_ref().map_or(0, |e| e.inner.dim())
}

/// Number of matrices in the ensemble, or 0 for a null handle.
///
/// # Safety
/// `ensemble` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gke_ensemble_len(ensemble: *const GkeEnsemble) -> usize {
    ensemble.as_ref().map_or(0, |e| e.inner.len())
}

/// # Safety
/// `ensemble` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gke_ensemble_free(ensemble: *mut GkeEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}

/// Solves the generalized Karcher equation for the generator named by `generator`
/// (`log`, `affine`, `harmonic`, `power:T`, `deform:P:TAG`).
///
/// `tol <= 0` selects the default tolerance and `max_iter == 0` the default
/// iteration budget. A solve that runs out of iterations still produces a
/// solution; check it with [`gke_solution_converged`].
///
/// # Safety
/// `ensemble` must be a live handle, `generator` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gke_solve(
    ensemble: *const GkeEnsemble,
    generator: *const c_char,
    tol: f64,
    max_iter: usize,
    out: *mut *mut GkeSolution,
) -> GkeStatus {
    guard(|| {
        let e = ensemble.as_ref().ok_or_else(|| null_err("ensemble"))?;
        let g: Generator = read_str(generator, "generator")?.parse().map_err(lib_err)?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let mut opts = SolverOptions::default();
        if tol > 0.0 {
            opts.tol = Some(tol);
        }
        if max_iter > 0 {
            opts.max_iter = max_iter;
        }
        let report = solve_gke(&e.inner, &g, &opts).map_err(lib_err)?;
        write_out(out, GkeSolution { report });
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gke_solution_dim(solution: *const GkeSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.report.solution.dim())
}

/// Copies the solution matrix into `buf` as `dim * dim` interleaved complex
/// entries in row-major order. `len` is the capacity of `buf` in doubles.
///
/// # Safety
/// `solution` must be a live handle and `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gke_solution_copy_matrix(
    solution: *const GkeSolution,
    buf: *mut f64,
    len: usize,
) -> GkeStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null_err("solution"))?;
        if buf.is_null() {
            return Err(null_err("buf"));
        }
        let m = s.report.solution.as_matrix();
        let k = m.nrows();
        if len < 2 * k * k {
            return Err(fail(
                GkeStatus::DimensionMismatch,
                format!("buffer holds {len} doubles, need {}", 2 * k * k),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, 2 * k * k);
        for i in 0..k {
            for j in 0..k {
                let z = m[(i, j)];
                out[2 * (i * k + j)] = z.re;
                out[2 * (i * k + j) + 1] = z.im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gke_solution_iterations(solution: *const GkeSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.report.iterations)
}

/// Final residual norm, or NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gke_solution_residual(solution: *const GkeSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.report.final_residual)
}

/// 1 when the solve reached its tolerance, 0 otherwise.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gke_solution_converged(solution: *const GkeSolution) -> c_int {
    solution.as_ref().map_or(0, |s| s.report.converged as c_int)
}

/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gke_solution_free(solution: *mut GkeSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Runs one seeded trial of the check named `check_id` on a random ensemble
/// of `count` matrices of size `dim` with spectra in `[lower, upper]`.
/// `generator` may be null to use the default generator cycle.
/// `tol <= 0` selects the default check tolerance.
///
/// # Safety
/// `check_id` must be a NUL-terminated string, `generator` null or one, and
/// `out` writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gke_run_check(
    check_id: *const c_char,
    generator: *const c_char,
    dim: usize,
    count: usize,
    lower: f64,
    upper: f64,
    seed: u64,
    trial: usize,
    tol: f64,
    out: *mut GkeCheckOutcome,
) -> GkeStatus {
    guard(|| {
        let id: CheckId = read_str(check_id, "check_id")?.parse().map_err(lib_err)?;
        let generator = if generator.is_null() {
            None
        } else {
            Some(read_str(generator, "generator")?.parse::<Generator>().map_err(lib_err)?)
        };
        if out.is_null() {
            return Err(null_err("out"));
        }
        let recipe = Recipe { dim, count, lower, upper, generator, ..Recipe::default() };
        let tol = if tol > 0.0 { tol } else { gke::verify::DEFAULT_CHECK_TOLERANCE };
        let inst = build_instance(id, &recipe, seed, trial).map_err(lib_err)?;
        let result = run_check(id, &inst, tol).map_err(lib_err)?;
        *out = GkeCheckOutcome {
            holds: result.holds as c_int,
            margin: result.margin,
            tolerance: result.tolerance,
        };
        Ok(())
    })
}

/// The constant (h+1)²/(4h) for a ratio `h >= 1`, NaN otherwise.
#[no_mangle]
pub extern "C" fn gke_kantorovich_constant(h: f64) -> f64 {
    kantorovich_constant(h).unwrap_or(f64::NAN)
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gke_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gke_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&GkeError::Parse("x".into())), GkeStatus::Parse);
        assert_eq!(
            status_of(&GkeError::NotPositiveDefinite { eig_min: -1.0 }),
            GkeStatus::NotPositiveDefinite
        );
        assert_eq!(status_of(&GkeError::Config("x".into())), GkeStatus::InvalidArgument);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, GkeStatus::Panic);
        assert!(!gke_last_error_message().is_null());
    }
}
