//! C ABI over the core toolkit: closed-form λ̄ bounds, asymptotic
//! predictions, and the sublevel-volume λ estimator.
//!
//! Conventions, mirrored in the generated `include/smf_rlct.h`:
//!
//! * every function returns an [`SmfStatus`] code and writes results
//!   through out-pointers; nothing is reported via errno or exceptions;
//! * ground truths are opaque handles created by
//!   [`smf_rlct_truth_new_random`] and released by [`smf_rlct_truth_free`];
//! * exact rationals cross the boundary as numerator/denominator pairs;
//! * panics are caught at the boundary and surface as
//!   [`SmfStatus::Panicked`] — they never unwind into C.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use smf_rlct::bounds::{
    free_energy_upper, gen_error_bound, param_dim, rlct_exact, rlct_upper_bound, tightness_gap,
    ExactCase,
};
use smf_rlct::estimator::{estimate_rlct_smf, geometric_grid, EstimatorError, VolumeScalingConfig};
use smf_rlct::{GroundTruth, ModelDims};
use num_traits::ToPrimitive;

/// Result code of every API call.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmfStatus {
    /// Success; out-parameters are filled.
    Ok = 0,
    /// A pointer was null or a parameter failed validation.
    InvalidArgument = 1,
    /// The computation ran but could not produce a result (for example,
    /// the Monte Carlo budget resolved too few thresholds).
    EstimationFailed = 2,
    /// A panic was caught at the boundary; out-parameters are untouched.
    Panicked = 3,
}

/// Static description of a status code (never null, do not free).
#[no_mangle]
pub extern "C" fn smf_rlct_status_message(status: i32) -> *const c_char {
    let msg: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"invalid argument\0",
        2 => b"estimation failed\0",
        3 => b"internal panic\0",
        _ => b"unknown status\0",
    };
    msg.as_ptr() as *const c_char
}

/// Everything known in closed form about one model shape.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SmfBoundInfo {
    /// Essential parameter dimension d = H(M+N) - H - N.
    pub param_dim: i64,
    /// Upper bound on the learning coefficient, as a reduced fraction.
    pub lambda_bar_num: i64,
    pub lambda_bar_den: i64,
    /// Nonzero when the exact value is known for this shape.
    pub has_exact: bool,
    /// Exact λ (valid only when `has_exact` is set).
    pub lambda_exact_num: i64,
    pub lambda_exact_den: i64,
    /// 0 = unknown, 1 = H=H0=1, 2 = H=H0=2, 3 = H=2 over H0=1.
    pub exact_case: i32,
    /// Slack of the bound against the regular reference: d/2 - λ̄ ≥ 0.
    pub gap_num: i64,
    pub gap_den: i64,
}

/// Volume-scaling estimate of the learning coefficient.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SmfEstimate {
    pub lambda_hat: f64,
    /// Estimated pole multiplicity (1 when the log term is disabled).
    pub multiplicity_hat: f64,
    pub stderr_lambda: f64,
    pub r_squared: f64,
    /// Leading thresholds that kept enough Monte Carlo hits for the fit.
    pub used_thresholds: u64,
    pub num_samples: u64,
}

/// Opaque ground-truth handle (a column-stochastic factorization drawn
/// away from the simplex boundary).
pub struct SmfTruth(GroundTruth);

fn guard(f: impl FnOnce() -> SmfStatus) -> SmfStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(SmfStatus::Panicked)
}

fn dims(m: u32, n: u32, h: u32, h0: u32) -> Option<ModelDims> {
    ModelDims::new(m, n, h, h0).ok()
}

/// Essential parameter dimension for shape (M, N, H, H0).
///
/// # Safety
/// `out` must point to writable memory for one `int64_t`.
#[no_mangle]
pub unsafe extern "C" fn smf_rlct_param_dim(
    m: u32,
    n: u32,
    h: u32,
    h0: u32,
    out: *mut i64,
) -> SmfStatus {
    guard(|| {
        if out.is_null() {
            return SmfStatus::InvalidArgument;
        }
        match dims(m, n, h, h0) {
            Some(d) => {
                unsafe { *out = param_dim(d) };
                SmfStatus::Ok
            }
            None => SmfStatus::InvalidArgument,
        }
    })
}

/// Closed-form bound table entry for shape (M, N, H, H0).
///
/// # Safety
/// `out` must point to writable memory for one `SmfBoundInfo`.
#[no_mangle]
pub unsafe extern "C" fn smf_rlct_bound(
    m: u32,
    n: u32,
    h: u32,
    h0: u32,
    out: *mut SmfBoundInfo,
) -> SmfStatus {
    guard(|| {
        if out.is_null() {
            return SmfStatus::InvalidArgument;
        }
        let Some(d) = dims(m, n, h, h0) else {
            return SmfStatus::InvalidArgument;
        };
        let bar = rlct_upper_bound(d);
        let gap = tightness_gap(d);
        let exact = rlct_exact(d);
        let info = SmfBoundInfo {
            param_dim: param_dim(d),
            lambda_bar_num: *bar.numer(),
            lambda_bar_den: *bar.denom(),
            has_exact: exact.is_some(),
            lambda_exact_num: exact.map_or(0, |(v, _)| *v.numer()),
            lambda_exact_den: exact.map_or(1, |(v, _)| *v.denom()),
            exact_case: match exact.map(|(_, c)| c) {
                None => 0,
                Some(ExactCase::SingleTopic) => 1,
                Some(ExactCase::TwoEqualTopics) => 2,
                Some(ExactCase::TwoOverOne) => 3,
            },
            gap_num: *gap.numer(),
            gap_den: *gap.denom(),
        };
        unsafe { *out = info };
        SmfStatus::Ok
    })
}

/// Leading-order bound λ̄/n on the expected generalization error at
/// sample size `sample_size`.
///
/// # Safety
/// `out` must point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn smf_rlct_gen_error_bound(
    m: u32,
    n: u32,
    h: u32,
    h0: u32,
    sample_size: u64,
    out: *mut f64,
) -> SmfStatus {
    guard(|| {
        if out.is_null() {
            return SmfStatus::InvalidArgument;
        }
        let Some(d) = dims(m, n, h, h0) else {
            return SmfStatus::InvalidArgument;
        };
        match gen_error_bound(d, sample_size) {
            Ok(v) => {
                unsafe { *out = v.to_f64().unwrap_or(f64::NAN) };
                SmfStatus::Ok
            }
            Err(_) => SmfStatus::InvalidArgument,
        }
    })
}

/// Leading-order upper bound n·s_n + λ̄·log(n) on the Bayesian free
/// energy, where `empirical_entropy` is the per-observation entropy of
/// the sample.
///
/// # Safety
/// `out` must point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn smf_rlct_free_energy_upper(
    m: u32,
    n: u32,
    h: u32,
    h0: u32,
    sample_size: u64,
    empirical_entropy: f64,
    out: *mut f64,
) -> SmfStatus {
    guard(|| {
        if out.is_null() || !empirical_entropy.is_finite() {
            return SmfStatus::InvalidArgument;
        }
        let Some(d) = dims(m, n, h, h0) else {
            return SmfStatus::InvalidArgument;
        };
        match free_energy_upper(d, sample_size, empirical_entropy) {
            Ok(v) => {
                unsafe { *out = v };
                SmfStatus::Ok
            }
            Err(_) => SmfStatus::InvalidArgument,
        }
    })
}

/// Draws a random rank-`h0` ground truth of shape M×N with interior
/// margin `delta`, reproducible from `seed`. On success `*out` owns the
/// handle; release it with [`smf_rlct_truth_free`].
///
/// # Safety
/// `out` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn smf_rlct_truth_new_random(
    m: u32,
    n: u32,
    h0: u32,
    delta: f64,
    seed: u64,
    out: *mut *mut SmfTruth,
) -> SmfStatus {
    guard(|| {
        if out.is_null() {
            return SmfStatus::InvalidArgument;
        }
        let Some(d) = dims(m, n, h0, h0) else {
            return SmfStatus::InvalidArgument;
        };
        match GroundTruth::random_seeded(d, delta, seed) {
            Ok(truth) => {
                unsafe { *out = Box::into_raw(Box::new(SmfTruth(truth))) };
                SmfStatus::Ok
            }
            Err(_) => SmfStatus::InvalidArgument,
        }
    })
}

/// Releases a truth handle. Null is a no-op.
///
/// # Safety
/// `truth` must be null or a pointer returned by
/// [`smf_rlct_truth_new_random`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn smf_rlct_truth_free(truth: *mut SmfTruth) {
    if !truth.is_null() {
        drop(unsafe { Box::from_raw(truth) });
    }
}

/// Shape of the truth behind a handle.
///
/// # Safety
/// `truth` must be a live handle; out-pointers must each point to
/// writable memory for one `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn smf_rlct_truth_shape(
    truth: *const SmfTruth,
    out_m: *mut u32,
    out_n: *mut u32,
    out_h0: *mut u32,
) -> SmfStatus {
    guard(|| {
        if truth.is_null() || out_m.is_null() || out_n.is_null() || out_h0.is_null() {
            return SmfStatus::InvalidArgument;
        }
        let t = unsafe { &(*truth).0 };
        unsafe {
            *out_m = t.num_outcomes() as u32;
            *out_n = t.num_docs() as u32;
            *out_h0 = t.inner_dim() as u32;
        }
        SmfStatus::Ok
    })
}

/// Estimates the learning coefficient of fitting a rank-`h` learner to
/// the given truth, by Monte Carlo scaling of the sublevel volume
/// Pr[error < t] on a geometric threshold grid `[t_hi … t_lo]` of
/// `t_points` points. Deterministic in (`truth`, arguments): the sampler
/// derives one ChaCha stream per work chunk from `seed`.
///
/// # Safety
/// `truth` must be a live handle and `out` must point to writable memory
/// for one `SmfEstimate`.
#[no_mangle]
pub unsafe extern "C" fn smf_rlct_estimate_volume(
    truth: *const SmfTruth,
    h: u32,
    num_samples: u64,
    t_hi: f64,
    t_lo: f64,
    t_points: usize,
    include_log_term: bool,
    seed: u64,
    out: *mut SmfEstimate,
) -> SmfStatus {
    guard(|| {
        if truth.is_null() || out.is_null() {
            return SmfStatus::InvalidArgument;
        }
        if !(t_hi.is_finite() && t_lo.is_finite() && t_lo > 0.0 && t_hi > t_lo) {
            return SmfStatus::InvalidArgument;
        }
        let t = unsafe { &(*truth).0 };
        let Some(d) =
            dims(t.num_outcomes() as u32, t.num_docs() as u32, h, t.inner_dim() as u32)
        else {
            return SmfStatus::InvalidArgument;
        };
        let config = VolumeScalingConfig {
            num_samples,
            t_grid: geometric_grid(t_hi, t_lo, t_points),
            include_log_term,
            seed,
        };
        if config.validate().is_err() {
            return SmfStatus::InvalidArgument;
        }
        match estimate_rlct_smf(d, t, &config) {
            Ok(est) => {
                unsafe {
                    *out = SmfEstimate {
                        lambda_hat: est.lambda_hat,
                        multiplicity_hat: est.multiplicity_hat,
                        stderr_lambda: est.stderr_lambda,
                        r_squared: est.r_squared,
                        used_thresholds: est.used_thresholds as u64,
                        num_samples: est.num_samples,
                    }
                };
                SmfStatus::Ok
            }
            Err(EstimatorError::TruthMismatch { .. }) => SmfStatus::InvalidArgument,
            Err(_) => SmfStatus::EstimationFailed,
        }
    })
}
