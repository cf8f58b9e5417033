//! Release gate. Each numbered check prints exactly one line,
//!
//! ```text
//! ACCEPTANCE <k> <name>: PASS|FAIL (<seconds>)
//! ```
//!
//! and the process exits nonzero if any check failed. A failure does not
//! stop the later checks, so the report is always complete. Every tolerance
//! is pinned next to the check that uses it; the Monte Carlo checks run on
//! fixed seeds and are bit-reproducible, so a pass here is a pass anywhere.
//!
//! Run directly with `cargo test --test acceptance`.

use std::any::Any;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smf_rlct::bounds::{param_dim, rlct_exact, rlct_upper_bound, ExactCase, Rational};
use smf_rlct::estimator::{
    estimate_rlct_free_energy, estimate_rlct_smf, estimate_rlct_volume, geometric_grid,
    rlct_equivalence_check, sample_simplex_columns, VolumeScalingConfig,
};
use smf_rlct::kernels::{kl_bernoulli_pointwise, kl_markov, kl_topic, sq_error};
use smf_rlct::linalg::symmetric_eigenvalues;
use smf_rlct::sim::{
    empirical_entropy, expected_gen_error, generate_dataset, generate_smf_dataset,
    marginal_likelihood_exact, mh_posterior_smf, smf_generalization_error, GibbsConfig, SmfModel,
};
use smf_rlct::{GroundTruth, ModelDims, StochasticMatrix};

type CheckResult = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn main() {
    let checks: &[(u32, &str, fn() -> CheckResult)] = &[
        (1, "exact rational rlct values", exact_rational_values),
        (2, "upper bound vs regular reference", bound_dominance),
        (3, "volume estimator calibration", estimator_calibration),
        (4, "volume estimator on factorizations", volume_oracle),
        (5, "kernel equivalence and ratio sandwich", kernel_equivalence),
        (6, "gibbs generalization error", gibbs_learning_curve),
        (7, "quadrature free-energy slope", free_energy_slope),
        (8, "bernoulli sandwich and posterior", bernoulli_route),
        (9, "markov kernel identities", markov_identities),
        (10, "sweep byte determinism", sweep_determinism),
    ];
    let mut failed = 0usize;
    for &(num, name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let secs = start.elapsed().as_secs_f64();
        let pass = matches!(outcome, Ok(Ok(())));
        println!("ACCEPTANCE {num:2} {name}: {} ({secs:.1}s)", if pass { "PASS" } else { "FAIL" });
        match outcome {
            Ok(Ok(())) => {}
            Ok(Err(msg)) => {
                failed += 1;
                eprintln!("    reason: {msg}");
            }
            Err(payload) => {
                failed += 1;
                eprintln!("    panicked: {}", panic_text(payload.as_ref()));
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}

fn panic_text(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

fn dims(m: u32, n: u32, h: u32, h0: u32) -> Result<ModelDims, String> {
    ModelDims::new(m, n, h, h0).map_err(|e| e.to_string())
}

fn truth(m: u32, n: u32, h: u32, h0: u32, delta: f64, seed: u64) -> Result<GroundTruth, String> {
    GroundTruth::random_seeded(dims(m, n, h, h0)?, delta, seed).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// 1. The closed-form regimes, compared as exact rationals over a dense grid.
//    Zero tolerance: both the exact value and (where tight) the upper bound
//    must match term for term.
// ---------------------------------------------------------------------------

fn exact_rational_values() -> CheckResult {
    for m in 2..=8u32 {
        for n in 2..=8u32 {
            let (mi, ni) = (m as i64, n as i64);

            // Rank-one truth fit at rank one: (M-1)/2, independent of N,
            // and the upper bound is tight.
            let single = dims(m, n, 1, 1)?;
            let expect = Rational::new(mi - 1, 2);
            match rlct_exact(single) {
                Some((value, ExactCase::SingleTopic)) => {
                    ensure!(value == expect, "({m},{n},1,1): exact {value} != {expect}");
                }
                other => return Err(format!("({m},{n},1,1): unexpected case {other:?}")),
            }
            ensure!(
                rlct_upper_bound(single) == expect,
                "({m},{n},1,1): bound {} not tight at {expect}",
                rlct_upper_bound(single)
            );

            // Rank-two truth fit at rank two: (2M+N-4)/2, bound again tight.
            let pair = dims(m, n, 2, 2)?;
            let expect = Rational::new(2 * mi + ni - 4, 2);
            match rlct_exact(pair) {
                Some((value, ExactCase::TwoEqualTopics)) => {
                    ensure!(value == expect, "({m},{n},2,2): exact {value} != {expect}");
                }
                other => return Err(format!("({m},{n},2,2): unexpected case {other:?}")),
            }
            ensure!(
                rlct_upper_bound(pair) == expect,
                "({m},{n},2,2): bound {} not tight at {expect}",
                rlct_upper_bound(pair)
            );

            // Rank-one truth fit at rank two: ((M-1) + min(M-1, N-1))/2,
            // never above the bound.
            let over = dims(m, n, 2, 1)?;
            let expect = Rational::new((mi - 1) + (mi - 1).min(ni - 1), 2);
            match rlct_exact(over) {
                Some((value, ExactCase::TwoOverOne)) => {
                    ensure!(value == expect, "({m},{n},2,1): exact {value} != {expect}");
                    ensure!(
                        value <= rlct_upper_bound(over),
                        "({m},{n},2,1): exact {value} exceeds bound {}",
                        rlct_upper_bound(over)
                    );
                }
                other => return Err(format!("({m},{n},2,1): unexpected case {other:?}")),
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 2. The bound never exceeds the regular-model reference d/2, with equality
//    exactly in the single-topic case. Exact rational comparison over
//    M,N in 2..8, H0 in 1..4, H in H0..5.
// ---------------------------------------------------------------------------

fn bound_dominance() -> CheckResult {
    for m in 2..=8u32 {
        for n in 2..=8u32 {
            for h0 in 1..=4u32 {
                for h in h0..=5u32 {
                    let d = dims(m, n, h, h0)?;
                    let bar = rlct_upper_bound(d);
                    let half_dim = Rational::new(param_dim(d), 2);
                    ensure!(
                        bar <= half_dim,
                        "{d}: bound {bar} exceeds regular reference {half_dim}"
                    );
                    let tight = h == 1 && h0 == 1;
                    ensure!(
                        (bar == half_dim) == tight,
                        "{d}: equality with d/2 must hold iff H=H0=1 (bound {bar}, d/2 {half_dim})"
                    );
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 3. Volume-scaling calibration on objectives with known thresholds:
//    theta^2 on [-1,1] (1/2), theta1^2+theta2^2 on the square (1),
//    theta1^2*theta2^2 (1/2 with a double pole). Budget 2e6 samples each.
// ---------------------------------------------------------------------------

const CALIBRATION_SAMPLES: u64 = 2_000_000;
const CALIBRATION_TOL: f64 = 0.05;

fn estimator_calibration() -> CheckResult {
    let config = |t_hi: f64, t_lo: f64, seed: u64| VolumeScalingConfig {
        num_samples: CALIBRATION_SAMPLES,
        t_grid: geometric_grid(t_hi, t_lo, 24),
        include_log_term: true,
        seed,
    };
    let interval = |rng: &mut ChaCha8Rng| rng.random_range(-1.0..1.0);
    let square =
        |rng: &mut ChaCha8Rng| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];

    let est = estimate_rlct_volume(|&x: &f64| x * x, interval, &config(1e-2, 1e-6, 11))
        .map_err(|e| e.to_string())?;
    ensure!(
        (est.lambda_hat - 0.5).abs() <= CALIBRATION_TOL,
        "theta^2: lambda_hat {} outside 0.5 +- {CALIBRATION_TOL}",
        est.lambda_hat
    );

    // lambda = 1 drains the deep tail below the hit floor; the three-decade
    // window keeps all 24 thresholds populated at the same budget.
    let est = estimate_rlct_volume(
        |x: &[f64; 2]| x[0] * x[0] + x[1] * x[1],
        square,
        &config(1e-1, 1e-4, 12),
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        (est.lambda_hat - 1.0).abs() <= CALIBRATION_TOL,
        "sum of squares: lambda_hat {} outside 1.0 +- {CALIBRATION_TOL}",
        est.lambda_hat
    );

    let est = estimate_rlct_volume(
        |x: &[f64; 2]| (x[0] * x[0]) * (x[1] * x[1]),
        square,
        &config(1e-2, 1e-6, 13),
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        (est.lambda_hat - 0.5).abs() <= CALIBRATION_TOL,
        "product of squares: lambda_hat {} outside 0.5 +- {CALIBRATION_TOL}",
        est.lambda_hat
    );
    ensure!(
        (1.5..=2.5).contains(&est.multiplicity_hat),
        "product of squares: multiplicity_hat {} outside [1.5, 2.5]",
        est.multiplicity_hat
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// 4. The factorization estimator against the closed-form values, one run
//    per regime. Threshold windows and log-term switches follow the
//    estimator's own calibration rules: the log term helps when the fitted
//    multiplicity is real (rank-one truths), and a narrow low window with
//    the term off is more stable when local slopes still drift at
//    reachable thresholds ((3,3,2,2) and (4,2,2,1)).
//
//    (4,2,2,1) doubles as the referee for the rank-two-over-rank-one
//    formula: the implemented min form predicts 2.0 here while the
//    rejected case split would predict 3.0, far outside the band.
// ---------------------------------------------------------------------------

const ORACLE_TRUTH_DELTA: f64 = 0.05;
const ORACLE_TRUTH_SEED: u64 = 42;
const ORACLE_SAMPLER_SEED: u64 = 1;

fn volume_oracle() -> CheckResult {
    struct Case {
        shape: (u32, u32, u32, u32),
        window: (f64, f64),
        log_term: bool,
        samples: u64,
        expect: f64,
        tol: f64,
    }
    let cases = [
        Case {
            shape: (2, 2, 1, 1),
            window: (1e-2, 1e-6),
            log_term: true,
            samples: 2_000_000,
            expect: 0.5,
            tol: 0.10,
        },
        Case {
            shape: (2, 2, 2, 2),
            window: (1e-1, 1e-4),
            log_term: true,
            samples: 4_000_000,
            expect: 1.0,
            tol: 0.15,
        },
        Case {
            shape: (3, 3, 2, 2),
            window: (1e-2, 1.5e-3),
            log_term: false,
            samples: 10_000_000,
            expect: 2.5,
            tol: 0.25,
        },
        Case {
            shape: (4, 2, 2, 1),
            window: (1e-2, 6e-4),
            log_term: false,
            samples: 10_000_000,
            expect: 2.0,
            tol: 0.25,
        },
    ];
    for case in cases {
        let (m, n, h, h0) = case.shape;
        let d = dims(m, n, h, h0)?;
        let t = truth(m, n, h, h0, ORACLE_TRUTH_DELTA, ORACLE_TRUTH_SEED)?;
        let config = VolumeScalingConfig {
            num_samples: case.samples,
            t_grid: geometric_grid(case.window.0, case.window.1, 24),
            include_log_term: case.log_term,
            seed: ORACLE_SAMPLER_SEED,
        };
        let est = estimate_rlct_smf(d, &t, &config).map_err(|e| format!("{d}: {e}"))?;
        ensure!(
            (est.lambda_hat - case.expect).abs() <= case.tol,
            "{d}: lambda_hat {:.4} outside {} +- {} (stderr {:.4}, {} thresholds used)",
            est.lambda_hat,
            case.expect,
            case.tol,
            est.stderr_lambda,
            est.used_thresholds
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 5. The KL and squared-error objectives must read off the same threshold
//    (shared-pool estimates statistically consistent), and their ratio
//    KL/Phi on the sublevel set {Phi <= 0.01} must stay inside positive
//    finite fitted constants that are stable across seeds.
// ---------------------------------------------------------------------------

const SANDWICH_LEVEL: f64 = 0.01;
const SANDWICH_SEEDS: [u64; 3] = [101, 102, 103];
const SANDWICH_TARGET_HITS: usize = 20_000;
const SANDWICH_MIN_HITS: usize = 5_000;
const SANDWICH_MAX_DRAWS: u64 = 4_000_000;
const SANDWICH_STABILITY: f64 = 0.20;

fn kernel_equivalence() -> CheckResult {
    let cases: [((u32, u32, u32, u32), (f64, f64)); 2] =
        [((2, 2, 1, 1), (1e-2, 1e-6)), ((2, 2, 2, 2), (1e-1, 1e-4))];
    for (shape, window) in cases {
        let (m, n, h, h0) = shape;
        let d = dims(m, n, h, h0)?;
        let t = truth(m, n, h, h0, ORACLE_TRUTH_DELTA, ORACLE_TRUTH_SEED)?;
        let (rows, cols, inner) = (m as usize, n as usize, h as usize);
        let sample_pair = |rng: &mut ChaCha8Rng| {
            let a = StochasticMatrix::from_array(sample_simplex_columns(rows, inner, rng))
                .expect("simplex columns are stochastic");
            let b = StochasticMatrix::from_array(sample_simplex_columns(inner, cols, rng))
                .expect("simplex columns are stochastic");
            (a, b)
        };

        let config = VolumeScalingConfig {
            num_samples: 2_000_000,
            t_grid: geometric_grid(window.0, window.1, 24),
            include_log_term: true,
            seed: ORACLE_SAMPLER_SEED,
        };
        // A diverging KL belongs to no sublevel set; +inf encodes exactly that.
        let report = rlct_equivalence_check(
            |p: &(StochasticMatrix, StochasticMatrix)| {
                kl_topic(&p.0, &p.1, &t).unwrap_or(f64::INFINITY)
            },
            |p: &(StochasticMatrix, StochasticMatrix)| {
                sq_error(&p.0, &p.1, &t).unwrap_or(f64::INFINITY)
            },
            sample_pair,
            &config,
        )
        .map_err(|e| format!("{d}: {e}"))?;
        ensure!(
            report.consistent,
            "{d}: kl lambda {:.4} (se {:.4}) vs sq lambda {:.4} (se {:.4}) inconsistent",
            report.estimate_f.lambda_hat,
            report.estimate_f.stderr_lambda,
            report.estimate_g.lambda_hat,
            report.estimate_g.stderr_lambda
        );

        let mut q_low = Vec::new();
        let mut q_high = Vec::new();
        for seed in SANDWICH_SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ratios = Vec::new();
            let mut draws = 0u64;
            while ratios.len() < SANDWICH_TARGET_HITS && draws < SANDWICH_MAX_DRAWS {
                draws += 1;
                let (a, b) = sample_pair(&mut rng);
                let phi = sq_error(&a, &b, &t).map_err(|e| format!("{d}: {e}"))?;
                if phi > 0.0 && phi <= SANDWICH_LEVEL {
                    let kl = kl_topic(&a, &b, &t).map_err(|e| format!("{d}: {e}"))?;
                    ratios.push(kl / phi);
                }
            }
            ensure!(
                ratios.len() >= SANDWICH_MIN_HITS,
                "{d}: only {} sublevel hits in {} draws (seed {seed})",
                ratios.len(),
                draws
            );
            ratios.sort_by(|x, y| x.partial_cmp(y).expect("finite ratios"));
            let lo = ratios[0];
            let hi = *ratios.last().unwrap();
            ensure!(
                lo > 0.0 && hi.is_finite(),
                "{d}: ratio range [{lo}, {hi}] not a positive finite sandwich (seed {seed})"
            );
            q_low.push(quantile(&ratios, 0.01));
            q_high.push(quantile(&ratios, 0.99));
        }
        for (label, values) in [("c1", &q_low), ("c2", &q_high)] {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            for v in values {
                ensure!(
                    (v - mean).abs() <= SANDWICH_STABILITY * mean,
                    "{d}: fitted {label} drifts across seeds: {values:?}"
                );
            }
        }
    }
    Ok(())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

// ---------------------------------------------------------------------------
// 6. The learning curve read directly off posterior simulations:
//    n * mean(G_n) approaches the threshold. Two-sided band in the
//    single-topic regime (exact posterior), one-sided 3-sigma allowance
//    where the Gibbs approximation can only inflate the error.
// ---------------------------------------------------------------------------

const CURVE_REPLICATES: usize = 200;

fn gibbs_learning_curve() -> CheckResult {
    let gibbs = GibbsConfig::default();

    let t = truth(2, 2, 1, 1, 0.1, 42)?;
    let n = 1_000u64;
    let summary = expected_gen_error(&t, 1, n, CURVE_REPLICATES, &gibbs, 4242)
        .map_err(|e| e.to_string())?;
    ensure!(
        summary.divergent_count <= CURVE_REPLICATES / 10,
        "(2,2,1,1): {} of {CURVE_REPLICATES} replicates divergent",
        summary.divergent_count
    );
    let scaled = n as f64 * summary.mean;
    ensure!(
        (scaled - 0.5).abs() <= 0.15,
        "(2,2,1,1): n*mean(G) = {scaled:.4} outside 0.5 +- 0.15 (ci {:.4})",
        n as f64 * summary.ci_halfwidth
    );

    let t = truth(3, 3, 2, 2, 0.1, 42)?;
    let n = 2_000u64;
    let summary = expected_gen_error(&t, 2, n, CURVE_REPLICATES, &gibbs, 4343)
        .map_err(|e| e.to_string())?;
    ensure!(
        summary.divergent_count <= CURVE_REPLICATES / 10,
        "(3,3,2,2): {} of {CURVE_REPLICATES} replicates divergent",
        summary.divergent_count
    );
    let scaled = n as f64 * summary.mean;
    let ci = n as f64 * summary.ci_halfwidth;
    ensure!(
        scaled <= 2.5 + 3.0 * ci,
        "(3,3,2,2): n*mean(G) = {scaled:.4} above 2.5 + 3*{ci:.4}"
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// 7. The free-energy route: quadrature -log marginal likelihood, recentered
//    by the empirical entropy, must grow like 0.5 * log n in the
//    single-topic regime.
// ---------------------------------------------------------------------------

const FREE_ENERGY_SIZES: [u64; 8] = [50, 100, 200, 400, 800, 1600, 3200, 6400];
const FREE_ENERGY_REPLICATES: usize = 20;
const FREE_ENERGY_DEPTH: usize = 2048; // one free coordinate
const FREE_ENERGY_SEED: u64 = 777;

fn free_energy_slope() -> CheckResult {
    let t = truth(2, 2, 1, 1, 0.1, 42)?;
    let mut pairs = Vec::with_capacity(FREE_ENERGY_SIZES.len() * FREE_ENERGY_REPLICATES);
    for (i, &n) in FREE_ENERGY_SIZES.iter().enumerate() {
        for rep in 0..FREE_ENERGY_REPLICATES {
            let mut rng = ChaCha8Rng::seed_from_u64(FREE_ENERGY_SEED);
            rng.set_stream((i * FREE_ENERGY_REPLICATES + rep + 1) as u64);
            let ds = generate_dataset(&t, n, &mut rng).map_err(|e| e.to_string())?;
            let f = marginal_likelihood_exact(&ds, 1, 1.0, 1.0, FREE_ENERGY_DEPTH)
                .map_err(|e| format!("n={n}: {e}"))?;
            pairs.push((n, f - n as f64 * empirical_entropy(&t, &ds)));
        }
    }
    let fit = estimate_rlct_free_energy(&pairs).map_err(|e| e.to_string())?;
    ensure!(
        (fit.lambda_hat - 0.5).abs() <= 0.10,
        "free-energy slope {:.4} outside 0.5 +- 0.10 (stderr {:.4})",
        fit.lambda_hat,
        fit.stderr
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// 8. The Bernoulli observation model. First the pointwise kernel is
//    quadratically sandwiched on [0.1, 0.9]^2 with positive finite fitted
//    constants; then a Metropolis posterior run must keep the scaled
//    generalization error at or below the threshold.
// ---------------------------------------------------------------------------

const BERNOULLI_REPLICATES: usize = 100;
const BERNOULLI_N: u64 = 500;
const BERNOULLI_MH_STEPS: usize = 30_000;
const BERNOULLI_MH_SCALE: f64 = 0.08;
const BERNOULLI_MH_MARGIN: f64 = 0.05;
const BERNOULLI_SEED: u64 = 888;

fn bernoulli_route() -> CheckResult {
    // Fitted sandwich constants over the grid (step 0.01, diagonal skipped).
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for ia in 0..=80 {
        for ib in 0..=80 {
            let a = 0.1 + 0.01 * ia as f64;
            let b = 0.1 + 0.01 * ib as f64;
            if (a - b).abs() < 1e-12 {
                continue;
            }
            let ratio = kl_bernoulli_pointwise(a, b).map_err(|e| e.to_string())?
                / ((b - a) * (b - a));
            c1 = c1.min(ratio);
            c2 = c2.max(ratio);
        }
    }
    ensure!(
        c1 > 0.0 && c2.is_finite() && c1 <= c2 && c2 < 100.0,
        "fitted sandwich constants [{c1}, {c2}] not positive and finite"
    );

    let t = truth(2, 2, 1, 1, 0.1, 42)?;
    let mut scaled = Vec::with_capacity(BERNOULLI_REPLICATES);
    for rep in 0..BERNOULLI_REPLICATES {
        let mut rng = ChaCha8Rng::seed_from_u64(BERNOULLI_SEED);
        rng.set_stream(rep as u64 + 1);
        let xs = generate_smf_dataset(&t, BERNOULLI_N, SmfModel::Bernoulli, &mut rng)
            .map_err(|e| e.to_string())?;
        let post = mh_posterior_smf(
            &xs,
            SmfModel::Bernoulli,
            1,
            BERNOULLI_MH_STEPS,
            BERNOULLI_MH_SCALE,
            BERNOULLI_MH_MARGIN,
            &mut rng,
        )
        .map_err(|e| format!("replicate {rep}: {e}"))?;
        let g = smf_generalization_error(&t, &post, SmfModel::Bernoulli)
            .map_err(|e| format!("replicate {rep}: {e}"))?;
        scaled.push(BERNOULLI_N as f64 * g);
    }
    let k = scaled.len() as f64;
    let mean = scaled.iter().sum::<f64>() / k;
    let var = scaled.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (k - 1.0);
    let ci = 1.96 * (var / k).sqrt();
    ensure!(
        mean <= 0.5 + 3.0 * ci,
        "bernoulli run: n*mean(G) = {mean:.4} above 0.5 + 3*{ci:.4}"
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// 9. The linear-channel kernel: identity input moment halves the squared
//    error exactly, and constructed positive definite moments sandwich it
//    between the extreme eigenvalues. Checked to 1e-12 on 1000 draws.
// ---------------------------------------------------------------------------

const MARKOV_DRAWS: usize = 1_000;
const MARKOV_TOL: f64 = 1e-12;

fn markov_identities() -> CheckResult {
    let t = truth(2, 2, 1, 1, 0.1, 7)?;
    let eye: Array2<f64> = Array2::eye(2);
    let moments = [array![[2.0, 0.5], [0.5, 1.0]], array![[1.5, -0.4], [-0.4, 0.8]]];
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for draw in 0..MARKOV_DRAWS {
        let a = StochasticMatrix::from_array(sample_simplex_columns(2, 1, &mut rng))
            .expect("simplex columns are stochastic");
        let b = StochasticMatrix::from_array(sample_simplex_columns(1, 2, &mut rng))
            .expect("simplex columns are stochastic");
        let phi = sq_error(&a, &b, &t).map_err(|e| e.to_string())?;
        let half = kl_markov(&a, &b, &t, &eye).map_err(|e| e.to_string())?;
        ensure!(
            (half - phi / 2.0).abs() <= MARKOV_TOL,
            "draw {draw}: identity moment gives {half:.15}, expected {:.15}",
            phi / 2.0
        );
        for x in &moments {
            let eig = symmetric_eigenvalues(x);
            let (hi, lo) = (eig[0], *eig.last().unwrap());
            let kl = kl_markov(&a, &b, &t, x).map_err(|e| e.to_string())?;
            ensure!(
                kl >= lo / 2.0 * phi - MARKOV_TOL && kl <= hi / 2.0 * phi + MARKOV_TOL,
                "draw {draw}: {kl:.15} outside eigenvalue sandwich [{:.15}, {:.15}]",
                lo / 2.0 * phi,
                hi / 2.0 * phi
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 10. Two fresh runs of the sweep command with the same config and seed
//     must produce byte-identical artifacts (summary, curve, every point
//     file). Timestamps live only in run_meta.json, which is exempt.
// ---------------------------------------------------------------------------

fn sweep_determinism() -> CheckResult {
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config_path = scratch.path().join("config.json");
    let config = serde_json::json!({
        "dims": {"m": 2, "n": 2, "h": 1, "h0": 1},
        "delta": 0.1,
        "n_grid": [100, 200],
        "replicates": 30,
        "sampler": {"sweeps": 120, "burnin": 40, "thin": 2, "alpha": 1.0, "beta": 1.0},
        "estimator": {
            "num_samples": 50_000,
            "t_grid": [1e-2, 1e-3, 1e-4, 1e-5],
            "include_log_term": true,
            "seed": 1
        },
        "master_seed": 99,
        "output_dir": "overridden-by-out-flag"
    });
    std::fs::write(&config_path, serde_json::to_vec_pretty(&config).expect("serializes"))
        .map_err(|e| e.to_string())?;

    let mut artifacts = Vec::new();
    for run in 0..2 {
        let out = scratch.path().join(format!("run{run}"));
        let output = Command::new(env!("CARGO_BIN_EXE_smf-rlct"))
            .args(["sweep", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            output.status.success(),
            "sweep run {run} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        artifacts.push(collect_artifacts(&out)?);
    }
    let (first, second) = (&artifacts[0], &artifacts[1]);
    ensure!(
        first.len() == second.len() && !first.is_empty(),
        "artifact sets differ in size: {} vs {}",
        first.len(),
        second.len()
    );
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(second) {
        ensure!(name_a == name_b, "artifact name mismatch: {name_a} vs {name_b}");
        ensure!(bytes_a == bytes_b, "artifact {name_a} differs between identical runs");
    }
    Ok(())
}

/// Deterministic artifacts under a sweep output root, sorted by file name.
/// run_meta.json records wall-clock timestamps and is skipped.
fn collect_artifacts(out_root: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    let mut stack = vec![out_root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| format!("{}: {e}", dir.display()))? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.file_name().expect("file name").to_string_lossy().into_owned();
                if name == "run_meta.json" {
                    continue;
                }
                let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                files.push((name, bytes));
            }
        }
    }
    files.sort();
    Ok(files)
}
