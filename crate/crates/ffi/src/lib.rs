//! C ABI for the `inar` crate.
//!
//! Every function returns an [`InarStatus`]; results come back through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`inar_last_error_message`]. Handles are opaque and owned by the caller,
//! who releases them with the matching `_free` function.
//!
//! Log-likelihood values use IEEE infinities for `±inf`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use inar::inference::{
    df_statistic, efficient_estimate, efficient_test, ols_estimates, semiparam_estimate,
};
use inar::likelihood::{loglr_approx, loglr_exact, transition_prob};
use inar::limitexp::LimitExperiment;
use inar::process::{simulate_path, LocalParam};
use inar::{InnovationSpec, Path};

/// Status codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InarStatus {
    Ok = 0,
    NullPointer = 1,
    /// A distribution or parameter was rejected at construction.
    InvalidArgument = 2,
    /// A computation was undefined for the given inputs.
    Domain = 3,
    /// Text input could not be parsed.
    Parse = 4,
    /// The caller's buffer is too short; the required length was written.
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Immigration distribution handle.
pub struct InarSpec(InnovationSpec);

/// Path handle, `X_0 = 0, X_1, ..., X_n`.
pub struct InarPath(Path);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

type Failure = (InarStatus, String);

fn fail<E: std::fmt::Display>(status: InarStatus) -> impl FnOnce(E) -> Failure {
    move |e| (status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> InarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InarStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside inar".into());
            InarStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| (InarStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err((InarStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn inar_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses `poisson:<rate>`, `geometric:<p>` or `table:<w0,w1,...>`.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_spec_parse(text: *const c_char, out: *mut *mut InarSpec) -> InarStatus {
    guard(|| {
        if text.is_null() {
            return Err((InarStatus::NullPointer, "text is null".into()));
        }
        let s = CStr::from_ptr(text).to_str().map_err(fail(InarStatus::Parse))?;
        let spec: InnovationSpec = s.parse().map_err(fail(InarStatus::Parse))?;
        write(out, Box::into_raw(Box::new(InarSpec(spec))))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_spec_poisson(rate: f64, out: *mut *mut InarSpec) -> InarStatus {
    guard(|| {
        let spec = InnovationSpec::poisson(rate).map_err(fail(InarStatus::InvalidArgument))?;
        write(out, Box::into_raw(Box::new(InarSpec(spec))))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_spec_geometric(p: f64, out: *mut *mut InarSpec) -> InarStatus {
    guard(|| {
        let spec = InnovationSpec::geometric(p).map_err(fail(InarStatus::InvalidArgument))?;
        write(out, Box::into_raw(Box::new(InarSpec(spec))))
    })
}

/// Weights on `{0, ..., len-1}`, normalized internally.
///
/// # Safety
/// `weights` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_spec_table(
    weights: *const f64,
    len: usize,
    out: *mut *mut InarSpec,
) -> InarStatus {
    guard(|| {
        if weights.is_null() {
            return Err((InarStatus::NullPointer, "weights is null".into()));
        }
        let w = std::slice::from_raw_parts(weights, len);
        let spec = InnovationSpec::table(w).map_err(fail(InarStatus::InvalidArgument))?;
        write(out, Box::into_raw(Box::new(InarSpec(spec))))
    })
}

/// # Safety
/// `spec` must come from an `inar_spec_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn inar_spec_free(spec: *mut InarSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_spec_pmf(spec: *const InarSpec, k: u64, out: *mut f64) -> InarStatus {
    guard(|| write(out, deref(spec, "spec")?.0.pmf(k)))
}

/// `g(0)`, mean and variance. Any of the out pointers may be null.
///
/// # Safety
/// `spec` must be a live handle; non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_spec_moments(
    spec: *const InarSpec,
    g0: *mut f64,
    mean: *mut f64,
    variance: *mut f64,
) -> InarStatus {
    guard(|| {
        let s = &deref(spec, "spec")?.0;
        let (m, v) = s.moments();
        for (p, x) in [(g0, s.g0()), (mean, m), (variance, v)] {
            if !p.is_null() {
                p.write(x);
            }
        }
        Ok(())
    })
}

/// Copies `len` values into a new path; the first value must be 0.
///
/// # Safety
/// `values` must point to `len` integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_path_new(
    values: *const u64,
    len: usize,
    out: *mut *mut InarPath,
) -> InarStatus {
    guard(|| {
        if values.is_null() {
            return Err((InarStatus::NullPointer, "values is null".into()));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let path = Path::new(v).map_err(fail(InarStatus::InvalidArgument))?;
        write(out, Box::into_raw(Box::new(InarPath(path))))
    })
}

/// Number of stored values, `n + 1`.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_path_len(path: *const InarPath, out: *mut usize) -> InarStatus {
    guard(|| write(out, deref(path, "path")?.0.values().len()))
}

/// Copies the values into `buf`. With a short buffer nothing is copied,
/// `*len_out` receives the required length and `BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `path` must be a live handle; `buf` must hold `cap` integers; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn inar_path_values(
    path: *const InarPath,
    buf: *mut u64,
    cap: usize,
    len_out: *mut usize,
) -> InarStatus {
    guard(|| {
        let values = deref(path, "path")?.0.values();
        if !len_out.is_null() {
            len_out.write(values.len());
        }
        if cap < values.len() {
            return Err((
                InarStatus::BufferTooSmall,
                format!("buffer holds {cap} values, path has {}", values.len()),
            ));
        }
        if buf.is_null() {
            return Err((InarStatus::NullPointer, "buf is null".into()));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// # Safety
/// `path` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn inar_path_free(path: *mut InarPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Simulates `n` steps from `X_0 = 0`; identical seeds give identical paths.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_simulate(
    spec: *const InarSpec,
    theta: f64,
    n: u64,
    seed: u64,
    out: *mut *mut InarPath,
) -> InarStatus {
    guard(|| {
        let spec = &deref(spec, "spec")?.0;
        let path = simulate_path(spec, theta, n, seed).map_err(fail(InarStatus::Domain))?;
        write(out, Box::into_raw(Box::new(InarPath(path))))
    })
}

/// Simulates at `θ = 1 - h/n²`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_simulate_local(
    spec: *const InarSpec,
    h: f64,
    n: u64,
    seed: u64,
    out: *mut *mut InarPath,
) -> InarStatus {
    guard(|| {
        let theta = LocalParam::new(h, n).map_err(fail(InarStatus::Domain))?.theta();
        inar_simulate(spec, theta, n, seed, out).into_result()
    })
}

impl InarStatus {
    fn into_result(self) -> Result<(), Failure> {
        match self {
            InarStatus::Ok => Ok(()),
            status => {
                let msg = LAST_ERROR.with(|e| {
                    e.borrow().as_ref().map(|c| c.to_string_lossy().into_owned()).unwrap_or_default()
                });
                Err((status, msg))
            }
        }
    }
}

/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_transition_prob(
    spec: *const InarSpec,
    theta: f64,
    from: u64,
    to: u64,
    out: *mut f64,
) -> InarStatus {
    guard(|| {
        let p = transition_prob(&deref(spec, "spec")?.0, theta, from, to).map_err(fail(InarStatus::Domain))?;
        write(out, p)
    })
}

/// Exact log-likelihood ratio of `θ = 1 - h/n²` against `θ = 1 - h0/n²`.
///
/// # Safety
/// `spec` and `path` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_loglr_exact(
    spec: *const InarSpec,
    path: *const InarPath,
    h: f64,
    h0: f64,
    out: *mut f64,
) -> InarStatus {
    guard(|| {
        let l = loglr_exact(&deref(spec, "spec")?.0, &deref(path, "path")?.0, h, h0)
            .map_err(fail(InarStatus::Domain))?;
        write(out, l.to_f64())
    })
}

/// Limit-experiment approximation `-(h - h0) g(0) μ/2 + D_n log(h/h0)`.
///
/// # Safety
/// `spec` and `path` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_loglr_approx(
    spec: *const InarSpec,
    path: *const InarPath,
    h: f64,
    h0: f64,
    out: *mut f64,
) -> InarStatus {
    guard(|| {
        let r = loglr_approx(&deref(spec, "spec")?.0, &deref(path, "path")?.0, h, h0)
            .map_err(fail(InarStatus::Domain))?;
        write(out, r.approx.to_f64())
    })
}

/// Number of downward steps.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_down_moves(path: *const InarPath, out: *mut u64) -> InarStatus {
    guard(|| write(out, deref(path, "path")?.0.down_moves()))
}

/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_efficient_estimate(
    path: *const InarPath,
    g0: f64,
    mu: f64,
    out: *mut f64,
) -> InarStatus {
    guard(|| {
        let e = efficient_estimate(&deref(path, "path")?.0, g0, mu).map_err(fail(InarStatus::Domain))?;
        write(out, e)
    })
}

/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_semiparam_estimate(path: *const InarPath, out: *mut f64) -> InarStatus {
    guard(|| {
        let e = semiparam_estimate(&deref(path, "path")?.0).map_err(fail(InarStatus::Domain))?;
        write(out, e)
    })
}

/// OLS estimate of `h`; `theta_hat` may be null.
///
/// # Safety
/// `path` must be a live handle; `h_hat` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_ols_estimate(
    path: *const InarPath,
    mu: f64,
    h_hat: *mut f64,
    theta_hat: *mut f64,
) -> InarStatus {
    guard(|| {
        let o = ols_estimates(&deref(path, "path")?.0, mu).map_err(fail(InarStatus::Domain))?;
        if !theta_hat.is_null() {
            theta_hat.write(o.theta_hat);
        }
        write(h_hat, o.h_hat_ols)
    })
}

/// Dickey–Fuller statistic; reject at level `α` when it is below the normal `α` quantile.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_df_statistic(
    path: *const InarPath,
    mu: f64,
    sigma2: f64,
    out: *mut f64,
) -> InarStatus {
    guard(|| {
        let t = df_statistic(&deref(path, "path")?.0, mu, sigma2).map_err(fail(InarStatus::Domain))?;
        write(out, t)
    })
}

/// Rejection probability of the down-move test: 1 after any down move, else `alpha`.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_efficient_test(
    path: *const InarPath,
    alpha: f64,
    out: *mut f64,
) -> InarStatus {
    guard(|| {
        let t = efficient_test(&deref(path, "path")?.0, alpha).map_err(fail(InarStatus::Domain))?;
        write(out, t.rejection_probability)
    })
}

/// Power `1 - (1 - α) exp(-h g(0) μ/2)` of the limit test.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inar_limit_power(
    spec: *const InarSpec,
    h: f64,
    alpha: f64,
    out: *mut f64,
) -> InarStatus {
    guard(|| {
        let e = LimitExperiment::from_spec(&deref(spec, "spec")?.0).map_err(fail(InarStatus::Domain))?;
        write(out, e.limit_test_power(h, alpha).map_err(fail(InarStatus::Domain))?)
    })
}
