//! C ABI for the armarket toolkit: opaque handles, status codes and a
//! JSON-configured experiment entry point, so other languages can bind
//! without re-implementing the numerics.
//!
//! Conventions:
//! - every function returns an [`ArmStatus`]; results go through out
//!   pointers;
//! - a non-`ARM_STATUS_OK` status leaves a message retrievable with
//!   [`arm_last_error_message`] (thread-local, valid until the next
//!   failing call on the same thread);
//! - handles created by `*_new` functions are released with the matching
//!   `*_free`; strings returned through out pointers are released with
//!   [`arm_string_free`];
//! - no call unwinds across the boundary: panics are caught and reported
//!   as `ARM_STATUS_RUNTIME`.
//!
//! The C header is generated into `include/armarket.h` at build time.

// `!(x > 0.0)` style domain checks intentionally treat NaN as out of range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use armarket::analytics::{gamma_cdf, gamma_pdf, gaussian_fixed_point, series_coefficients, SeriesDistribution};
use armarket::error::Error;
use armarket::estimation::{
    ks_distance, ks_two_sample, moments, tail_exponent, EmpiricalDistribution,
};
use armarket::experiment::{self, ExperimentConfig};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument failed validation (bad UTF-8, malformed config).
    InvalidArgument = 2,
    /// An argument outside the mathematical domain of the operation.
    Domain = 3,
    /// An invalid or inconsistent configuration.
    Config = 4,
    /// Any other failure (I/O, resolution, internal panic).
    Runtime = 5,
}

/// Opaque handle to a truncated exponential-noise steady-state series.
pub struct ArmSeries(SeriesDistribution);

/// Opaque handle to a finalized set of samples.
pub struct ArmSamples(EmpiricalDistribution);

/// Tail-fit result: density exponent `gamma_hat` with its standard error,
/// the number of top order statistics used and the fit threshold.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ArmTailFit {
    pub gamma_hat: f64,
    pub std_err: f64,
    pub k: usize,
    pub w_min: f64,
}

/// Moments with a batch-means standard error of the mean.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ArmMoments {
    pub mean: f64,
    pub std: f64,
    pub se_mean: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ArmStatus {
    match err {
        Error::Domain(_) | Error::ScheduleDomain { .. } => ArmStatus::Domain,
        Error::Config(_) | Error::Json(_) => ArmStatus::Config,
        _ => ArmStatus::Runtime,
    }
}

fn fail(err: Error) -> ArmStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Run `f`, catching panics so they never unwind across the C boundary.
fn guarded<F: FnOnce() -> ArmStatus>(f: F) -> ArmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            ArmStatus::Runtime
        }
    }
}

/// Message of the last failing call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn arm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow().as_ref().map(|c| c.as_ptr()).unwrap_or(ptr::null())
    })
}

/// Release a string returned through an out pointer.
///
/// # Safety
/// `s` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn arm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// steady-state series

/// Build the exponential-noise steady-state series at savings `lambda`,
/// truncated at `order`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arm_series_new(
    lambda: f64,
    order: usize,
    out: *mut *mut ArmSeries,
) -> ArmStatus {
    if out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| match series_coefficients(lambda, order) {
        Ok(series) => {
            *out = Box::into_raw(Box::new(ArmSeries(series)));
            ArmStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// # Safety
/// `series` must come from [`arm_series_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn arm_series_free(series: *mut ArmSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

unsafe fn series_eval(
    series: *const ArmSeries,
    out: *mut f64,
    f: impl FnOnce(&SeriesDistribution) -> armarket::Result<f64>,
) -> ArmStatus {
    if series.is_null() || out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| match f(&(*series).0) {
        Ok(v) => {
            *out = v;
            ArmStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Density (clamped at zero) at `x`.
///
/// # Safety
/// `series` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_series_pdf(
    series: *const ArmSeries,
    x: f64,
    out: *mut f64,
) -> ArmStatus {
    series_eval(series, out, |s| s.pdf(x))
}

/// Raw truncated series value at `x` (may undershoot zero near the origin).
///
/// # Safety
/// `series` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_series_raw_pdf(
    series: *const ArmSeries,
    x: f64,
    out: *mut f64,
) -> ArmStatus {
    series_eval(series, out, |s| s.raw_pdf(x))
}

/// CDF normalized by the truncated mass.
///
/// # Safety
/// `series` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_series_cdf(
    series: *const ArmSeries,
    x: f64,
    out: *mut f64,
) -> ArmStatus {
    series_eval(series, out, |s| Ok(s.cdf(x)))
}

/// Raw first moment `sum C_m lambda^2m`.
///
/// # Safety
/// `series` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_series_mean(series: *const ArmSeries, out: *mut f64) -> ArmStatus {
    series_eval(series, out, |s| Ok(s.mean()))
}

/// Truncated mass `sum C_m lambda^m`.
///
/// # Safety
/// `series` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_series_mass(series: *const ArmSeries, out: *mut f64) -> ArmStatus {
    series_eval(series, out, |s| Ok(s.mass()))
}

// ---------------------------------------------------------------------------
// closed forms

/// Stationary Gaussian parameters `alpha = alpha0/(1-lambda)`,
/// `sigma = sigma0/sqrt(1-lambda^2)`.
///
/// # Safety
/// `alpha_out` and `sigma_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_gaussian_fixed_point(
    alpha0: f64,
    sigma0: f64,
    lambda: f64,
    alpha_out: *mut f64,
    sigma_out: *mut f64,
) -> ArmStatus {
    if alpha_out.is_null() || sigma_out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| match gaussian_fixed_point(alpha0, sigma0, lambda) {
        Ok((a, s)) => {
            *alpha_out = a;
            *sigma_out = s;
            ArmStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Gamma-family density `x^(n-1) e^-x / Gamma(n)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arm_gamma_pdf(n: f64, x: f64, out: *mut f64) -> ArmStatus {
    if out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| match gamma_pdf(n, x) {
        Ok(v) => {
            *out = v;
            ArmStatus::Ok
        }
        Err(e) => fail(e),
    })
}

// ---------------------------------------------------------------------------
// sample statistics

/// Copy `len` values into a new sample set.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn arm_samples_new(
    values: *const f64,
    len: usize,
    out: *mut *mut ArmSamples,
) -> ArmStatus {
    if values.is_null() || out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| {
        let slice = std::slice::from_raw_parts(values, len);
        *out = Box::into_raw(Box::new(ArmSamples(EmpiricalDistribution::new(slice.to_vec()))));
        ArmStatus::Ok
    })
}

/// # Safety
/// `samples` must come from [`arm_samples_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn arm_samples_free(samples: *mut ArmSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// # Safety
/// `samples` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn arm_samples_count(samples: *const ArmSamples) -> usize {
    if samples.is_null() {
         0
    } else {
        (*samples).0.count()
    }
}

/// KS distance against an exponential CDF with the given mean.
///
/// # Safety
/// `samples` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_samples_ks_exponential(
    samples: *const ArmSamples,
    mean: f64,
    out: *mut f64,
) -> ArmStatus {
    if samples.is_null() || out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| {
        if !(mean > 0.0) {
            return fail(Error::Domain(format!("exponential mean must be positive, got {mean}")));
        }
        match ks_distance(&(*samples).0, |x| armarket::analytics::exponential_cdf(mean, x)) {
            Ok(d) => {
                *out = d;
                ArmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// KS distance against a Gamma-family CDF with shape `n` scaled to the
/// given mean.
///
/// # Safety
/// `samples` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_samples_ks_gamma(
    samples: *const ArmSamples,
    n: f64,
    mean: f64,
    out: *mut f64,
) -> ArmStatus {
    if samples.is_null() || out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| {
        if !(n > 0.0) || !(mean > 0.0) {
            return fail(Error::Domain(format!(
                "gamma reference needs n > 0 and mean > 0, got n = {n}, mean = {mean}"
            )));
        }
        match ks_distance(&(*samples).0, |x| gamma_cdf(n, x * n / mean)) {
            Ok(d) => {
                *out = d;
                ArmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Two-sample KS distance.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn arm_samples_ks_two(
    a: *const ArmSamples,
    b: *const ArmSamples,
    out: *mut f64,
) -> ArmStatus {
    if a.is_null() || b.is_null() || out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| match ks_two_sample(&(*a).0, &(*b).0) {
        Ok(d) => {
            *out = d;
            ArmStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Hill tail fit; `k = 0` selects the default top decile.
///
/// # Safety
/// `samples` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_samples_tail_exponent(
    samples: *const ArmSamples,
    k: usize,
    out: *mut ArmTailFit,
) -> ArmStatus {
    if samples.is_null() || out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| {
        let k = if k == 0 { None } else { Some(k) };
        match tail_exponent(&(*samples).0, k) {
            Ok(fit) => {
                *out = ArmTailFit {
                    gamma_hat: fit.gamma_hat,
                    std_err: fit.std_err,
                    k: fit.k,
                    w_min: fit.w_min,
                };
                ArmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Mean, std and batch-means standard error.
///
/// # Safety
/// `samples` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arm_samples_moments(
    samples: *const ArmSamples,
    out: *mut ArmMoments,
) -> ArmStatus {
    if samples.is_null() || out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| match moments(&(*samples).0) {
        Ok(m) => {
            *out = ArmMoments { mean: m.mean, std: m.std, se_mean: m.se_mean };
            ArmStatus::Ok
        }
        Err(e) => fail(e),
    })
}

// ---------------------------------------------------------------------------
// experiment runner

/// Run one experiment from a JSON configuration (the same schema the
/// `armarket` CLI consumes). On success `summary_json_out` receives the
/// summary JSON; release it with [`arm_string_free`]. Artifacts are
/// written to the directory named in the configuration.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string;
/// `summary_json_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arm_run_experiment(
    config_json: *const c_char,
    summary_json_out: *mut *mut c_char,
) -> ArmStatus {
    if config_json.is_null() || summary_json_out.is_null() {
        return ArmStatus::NullPointer;
    }
    guarded(|| {
        let text = match CStr::from_ptr(config_json).to_str() {
            Ok(t) => t,
            Err(e) => {
                set_error(format!("config is not valid UTF-8: {e}"));
                return ArmStatus::InvalidArgument;
            }
        };
        let config = match ExperimentConfig::from_json(text) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match experiment::run(&config) {
            Ok(artifacts) => match serde_json::to_string_pretty(&artifacts.summary) {
                Ok(json) => {
                    let c = CString::new(json.replace('\0', " ")).unwrap();
                    *summary_json_out = c.into_raw();
                    ArmStatus::Ok
                }
                Err(e) => fail(Error::Json(e)),
            },
            Err(e) => fail(e),
        }
    })
}
