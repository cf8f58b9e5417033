//! Exercises the C ABI from Rust: status codes, bound values, handle
//! lifecycle, and a small estimation run.

use smf_rlct_ffi::*;

fn bound(m: u32, n: u32, h: u32, h0: u32) -> SmfBoundInfo {
    let mut info = SmfBoundInfo {
        param_dim: 0,
        lambda_bar_num: 0,
        lambda_bar_den: 0,
        has_exact: false,
        lambda_exact_num: 0,
        lambda_exact_den: 0,
        exact_case: -1,
        gap_num: 0,
        gap_den: 0,
    };
    let status = unsafe { smf_rlct_bound(m, n, h, h0, &mut info) };
    assert_eq!(status, SmfStatus::Ok);
    info
}

#[test]
fn bound_matches_known_values() {
    let info = bound(3, 3, 2, 2);
    assert_eq!(info.param_dim, 7);
    assert_eq!((info.lambda_bar_num, info.lambda_bar_den), (5, 2));
    assert!(info.has_exact);
    assert_eq!((info.lambda_exact_num, info.lambda_exact_den), (5, 2));
    assert_eq!(info.exact_case, 2);
    assert_eq!((info.gap_num, info.gap_den), (1, 1));

    let eq = bound(2, 2, 1, 1);
    assert_eq!((eq.lambda_bar_num, eq.lambda_bar_den), (1, 2));
    assert_eq!((eq.gap_num, eq.gap_den), (0, 1));
    assert_eq!(eq.exact_case, 1);

    let open = bound(4, 4, 3, 3);
    assert!(!open.has_exact);
    assert_eq!(open.exact_case, 0);
}

#[test]
fn invalid_shapes_and_null_pointers_are_rejected() {
    let mut d = 0i64;
    assert_eq!(unsafe { smf_rlct_param_dim(1, 2, 1, 1, &mut d) }, SmfStatus::InvalidArgument);
    assert_eq!(unsafe { smf_rlct_param_dim(2, 2, 1, 2, &mut d) }, SmfStatus::InvalidArgument);
    assert_eq!(
        unsafe { smf_rlct_param_dim(2, 2, 1, 1, std::ptr::null_mut()) },
        SmfStatus::InvalidArgument
    );
    assert_eq!(unsafe { smf_rlct_param_dim(2, 2, 1, 1, &mut d) }, SmfStatus::Ok);
    assert_eq!(d, 1);

    let mut g = 0f64;
    assert_eq!(
        unsafe { smf_rlct_gen_error_bound(2, 2, 1, 1, 0, &mut g) },
        SmfStatus::InvalidArgument,
        "zero sample size"
    );
    assert_eq!(unsafe { smf_rlct_gen_error_bound(2, 2, 1, 1, 100, &mut g) }, SmfStatus::Ok);
    assert!((g - 0.005).abs() < 1e-15);

    let mut f = 0f64;
    assert_eq!(
        unsafe { smf_rlct_free_energy_upper(2, 2, 1, 1, 100, f64::NAN, &mut f) },
        SmfStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { smf_rlct_free_energy_upper(2, 2, 1, 1, 100, 1.0, &mut f) },
        SmfStatus::Ok
    );
    assert!((f - (100.0 + 0.5 * (100.0f64).ln())).abs() < 1e-12);
}

#[test]
fn truth_lifecycle_and_estimation() {
    let mut truth: *mut SmfTruth = std::ptr::null_mut();
    assert_eq!(
        unsafe { smf_rlct_truth_new_random(2, 2, 1, 2.0, 5, &mut truth) },
        SmfStatus::InvalidArgument,
        "margin too large to fit in the simplex"
    );
    assert_eq!(
        unsafe { smf_rlct_truth_new_random(2, 2, 1, 0.05, 5, &mut truth) },
        SmfStatus::Ok
    );
    assert!(!truth.is_null());

    let (mut m, mut n, mut h0) = (0u32, 0u32, 0u32);
    assert_eq!(
        unsafe { smf_rlct_truth_shape(truth, &mut m, &mut n, &mut h0) },
        SmfStatus::Ok
    );
    assert_eq!((m, n, h0), (2, 2, 1));

    let mut est = SmfEstimate {
        lambda_hat: 0.0,
        multiplicity_hat: 0.0,
        stderr_lambda: 0.0,
        r_squared: 0.0,
        used_thresholds: 0,
        num_samples: 0,
    };
    // Bad grid direction rejected up front.
    assert_eq!(
        unsafe { smf_rlct_estimate_volume(truth, 1, 50_000, 1e-3, 1e-1, 8, true, 1, &mut est) },
        SmfStatus::InvalidArgument
    );
    let status = unsafe {
        smf_rlct_estimate_volume(truth, 1, 50_000, 1e-1, 1e-3, 8, true, 1, &mut est)
    };
    assert_eq!(status, SmfStatus::Ok);
    assert!((est.lambda_hat - 0.5).abs() < 0.2, "lambda_hat {}", est.lambda_hat);
    assert_eq!(est.num_samples, 50_000);
    assert!(est.used_thresholds >= 4);

    // Same arguments, same answer (determinism across the boundary).
    let mut again = est;
    assert_eq!(
        unsafe { smf_rlct_estimate_volume(truth, 1, 50_000, 1e-1, 1e-3, 8, true, 1, &mut again) },
        SmfStatus::Ok
    );
    assert_eq!(again.lambda_hat.to_bits(), est.lambda_hat.to_bits());

    unsafe { smf_rlct_truth_free(truth) };
    unsafe { smf_rlct_truth_free(std::ptr::null_mut()) };
}

#[test]
fn status_messages_cover_all_codes() {
    for code in 0..=4 {
        let ptr = smf_rlct_status_message(code);
        assert!(!ptr.is_null());
        let text = unsafe { std::ffi::CStr::from_ptr(ptr) }.to_str().unwrap();
        assert!(!text.is_empty());
    }
}
