//! RLCT estimation.
//!
//! The primary estimator reads the threshold scaling law
//! `Pr[Φ < t] ≈ c · t^λ · (−log t)^(m−1)` off plain Monte Carlo samples of
//! the objective: one shared sample pool is counted against a geometric
//! threshold grid and the law is fit by least squares in log space. Two
//! secondary estimators recover λ from learning-curve data instead: the
//! slope of `F_n − n·S_n` against `log n`, and `n · mean(G_n)`.
//!
//! Sampling is chunked, with one ChaCha stream per fixed-size chunk derived
//! from the master seed (stream id = chunk index + 1). Counts are summed
//! over chunks, so results are bit-identical for a given seed regardless of
//! how many threads rayon schedules.

use crate::kernels::sq_diff;
use crate::truth::GroundTruth;
use crate::ModelDims;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Samples per RNG stream; fixed so that results do not depend on the
/// worker count.
const CHUNK: u64 = 1 << 16;

/// A threshold only enters the regression with at least this many hits.
pub const MIN_HITS: u64 = 100;

/// Least number of usable thresholds for a fit.
pub const MIN_USABLE: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("num_samples = {0} too small; need at least 10000")]
    TooFewSamples(u64),
    #[error("threshold grid invalid: {0}")]
    BadGrid(&'static str),
    #[error("only {usable} thresholds kept >= {MIN_HITS} hits; need {MIN_USABLE}. \
             Increase num_samples or raise the threshold grid")]
    InsufficientResolution { usable: usize },
    #[error("objective returned NaN")]
    NaNObjective,
    #[error("regression design is singular")]
    SingularFit,
    #[error("learning-curve fit needs at least 4 distinct sample sizes, got {0}")]
    TooFewSizes(usize),
    #[error("sample sizes span a factor of {0:.1}; need at least 100 (two decades)")]
    NarrowSizeRange(f64),
    #[error("value for n={n} is not finite")]
    NonFiniteValue { n: u64 },
    #[error("need at least {need} replicates, got {got}")]
    TooFewReplicates { got: usize, need: usize },
    #[error("sample size must be at least 1")]
    ZeroSamples,
    #[error("truth has shape M={m}, N={n}, H0={h0}, incompatible with dims {dims}")]
    TruthMismatch { m: usize, n: usize, h0: usize, dims: ModelDims },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeScalingConfig {
    /// Size of the shared sample pool.
    pub num_samples: u64,
    /// Thresholds, strictly decreasing, in (0,1).
    pub t_grid: Vec<f64>,
    /// Fit the `(m−1)·log(−log t)` multiplicity term. Disabling it biases
    /// λ̂ upward when the true multiplicity exceeds 1.
    pub include_log_term: bool,
    pub seed: u64,
}

impl Default for VolumeScalingConfig {
    fn default() -> Self {
        VolumeScalingConfig {
            num_samples: 2_000_000,
            t_grid: geometric_grid(1e-2, 1e-6, 24),
            include_log_term: true,
            seed: 1,
        }
    }
}

impl VolumeScalingConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.num_samples < 10_000 {
            return Err(EstimatorError::TooFewSamples(self.num_samples));
        }
        if self.t_grid.len() < MIN_USABLE {
            return Err(EstimatorError::BadGrid("fewer than 4 thresholds"));
        }
        for w in self.t_grid.windows(2) {
            if !(w[1] < w[0]) {
                return Err(EstimatorError::BadGrid("thresholds must be strictly decreasing"));
            }
        }
        let first = self.t_grid[0];
        let last = *self.t_grid.last().unwrap();
        if !(last > 0.0) || !first.is_finite() {
            return Err(EstimatorError::BadGrid("thresholds must be positive and finite"));
        }
        if first >= 1.0 {
            // log(−log t) needs t < 1; keeping the rule unconditional keeps
            // configs portable between fits with and without the term.
            return Err(EstimatorError::BadGrid("thresholds must lie in (0,1)"));
        }
        Ok(())
    }
}

/// `points` thresholds in geometric progression from `hi` down to `lo`.
pub fn geometric_grid(hi: f64, lo: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && hi > lo && lo > 0.0);
    let step = (lo / hi).powf(1.0 / (points - 1) as f64);
    (0..points).map(|k| hi * step.powi(k as i32)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlctEstimate {
    pub lambda_hat: f64,
    /// Estimated pole multiplicity, clamped to ≥ 1. Exactly 1 when the log
    /// term is excluded.
    pub multiplicity_hat: f64,
    pub stderr_lambda: f64,
    pub r_squared: f64,
    /// The full threshold grid, descending.
    pub t_grid: Vec<f64>,
    /// Hit counts per threshold (nonincreasing along the grid).
    pub counts: Vec<u64>,
    /// Number of leading grid entries that entered the regression.
    pub used_thresholds: usize,
    pub seed: u64,
    pub num_samples: u64,
}

/// Estimate the RLCT of `objective` over the measure induced by `sampler`.
///
/// The sampler sees a dedicated ChaCha stream; the objective must be
/// nonnegative (up to rounding) and may return `+∞` for points it wants
/// excluded from every sublevel set.
pub fn estimate_rlct_volume<P, O, S>(
    objective: O,
    sampler: S,
    config: &VolumeScalingConfig,
) -> Result<RlctEstimate, EstimatorError>
where
    O: Fn(&P) -> f64 + Sync,
    S: Fn(&mut ChaCha8Rng) -> P + Sync,
{
    let counts = count_hits(&[&objective], &sampler, config)?;
    fit_estimate(counts.into_iter().next().unwrap(), config)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub estimate_f: RlctEstimate,
    pub estimate_g: RlctEstimate,
    /// `|λ_f − λ_g| ≤ 2·(se_f + se_g)`.
    pub consistent: bool,
}

/// Estimate the RLCTs of two objectives on one shared sample pool and test
/// whether they agree within twice the summed standard errors.
pub fn rlct_equivalence_check<P, F, G, S>(
    objective_f: F,
    objective_g: G,
    sampler: S,
    config: &VolumeScalingConfig,
) -> Result<EquivalenceReport, EstimatorError>
where
    F: Fn(&P) -> f64 + Sync,
    G: Fn(&P) -> f64 + Sync,
    S: Fn(&mut ChaCha8Rng) -> P + Sync,
{
    let mut counts = count_hits(&[&objective_f, &objective_g], &sampler, config)?.into_iter();
    let estimate_f = fit_estimate(counts.next().unwrap(), config)?;
    let estimate_g = fit_estimate(counts.next().unwrap(), config)?;
    let consistent = (estimate_f.lambda_hat - estimate_g.lambda_hat).abs()
        <= 2.0 * (estimate_f.stderr_lambda + estimate_g.stderr_lambda);
    Ok(EquivalenceReport { estimate_f, estimate_g, consistent })
}

/// Factor pair drawn uniformly (flat Dirichlet columns) from the learner's
/// parameter space.
pub struct FactorSample {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
}

/// Draw `rows×cols` with independent flat-Dirichlet columns, without the
/// validation overhead of the public constructor (hot path).
pub fn sample_simplex_columns(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut data = Array2::zeros((rows, cols));
    for c in 0..cols {
        let mut sum = 0.0;
        for r in 0..rows {
            let e: f64 = rng.sample(Exp1);
            data[(r, c)] = e;
            sum += e;
        }
        for r in 0..rows {
            data[(r, c)] /= sum;
        }
    }
    data
}

/// RLCT of the squared factorization error for a rank-`H` learner against
/// `truth`, by volume scaling over the uniform prior on the learner's
/// product of simplices.
pub fn estimate_rlct_smf(
    dims: ModelDims,
    truth: &GroundTruth,
    config: &VolumeScalingConfig,
) -> Result<RlctEstimate, EstimatorError> {
    check_truth(dims, truth)?;
    let (m, n, h) = (dims.m() as usize, dims.n() as usize, dims.h() as usize);
    let c0 = truth.product();
    estimate_rlct_volume(
        |p: &FactorSample| sq_diff(&p.a.dot(&p.b), c0),
        |rng| FactorSample {
            a: sample_simplex_columns(m, h, rng),
            b: sample_simplex_columns(h, n, rng),
        },
        config,
    )
}

pub(crate) fn check_truth(dims: ModelDims, truth: &GroundTruth) -> Result<(), EstimatorError> {
    if truth.num_outcomes() != dims.m() as usize
        || truth.num_docs() != dims.n() as usize
        || truth.inner_dim() != dims.h0() as usize
    {
        return Err(EstimatorError::TruthMismatch {
            m: truth.num_outcomes(),
            n: truth.num_docs(),
            h0: truth.inner_dim(),
            dims,
        });
    }
    Ok(())
}

fn count_hits<P, S>(
    objectives: &[&(dyn Fn(&P) -> f64 + Sync)],
    sampler: &S,
    config: &VolumeScalingConfig,
) -> Result<Vec<Vec<u64>>, EstimatorError>
where
    S: Fn(&mut ChaCha8Rng) -> P + Sync,
{
    config.validate()?;
    let grid = &config.t_grid;
    let num_chunks = config.num_samples.div_ceil(CHUNK);
    let zero = || vec![vec![0u64; grid.len()]; objectives.len()];
    (0..num_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(chunk + 1);
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(config.num_samples);
            let mut counts = zero();
            for _ in lo..hi {
                let point = sampler(&mut rng);
                for (oi, objective) in objectives.iter().enumerate() {
                    let value = objective(&point);
                    if value.is_nan() {
                        return Err(EstimatorError::NaNObjective);
                    }
                    // Descending grid: the hit prefix is every t above value.
                    let hits = grid.partition_point(|&t| value < t);
                    for slot in &mut counts[oi][..hits] {
                        *slot += 1;
                    }
                }
            }
            Ok(counts)
        })
        .try_reduce(zero, |mut acc, part| {
            for (a, p) in acc.iter_mut().zip(part) {
                for (x, y) in a.iter_mut().zip(p) {
                    *x += y;
                }
            }
            Ok(acc)
        })
}

fn fit_estimate(counts: Vec<u64>, config: &VolumeScalingConfig) -> Result<RlctEstimate, EstimatorError> {
    debug_assert!(counts.windows(2).all(|w| w[1] <= w[0]), "sublevel counts must nest");
    let usable = counts.iter().filter(|&&c| c >= MIN_HITS).count();
    if usable < MIN_USABLE {
        return Err(EstimatorError::InsufficientResolution { usable });
    }
    let mut design: Vec<Vec<f64>> = Vec::with_capacity(usable);
    let mut y = Vec::with_capacity(usable);
    for (k, &c) in counts.iter().enumerate().take(usable) {
        let t = config.t_grid[k];
        let mut row = vec![1.0, t.ln()];
        if config.include_log_term {
            row.push((-t.ln()).ln());
        }
        design.push(row);
        y.push((c as f64 / config.num_samples as f64).ln());
    }
    let fit = ols(&design, &y).ok_or(EstimatorError::SingularFit)?;
    let multiplicity_hat =
        if config.include_log_term { (1.0 + fit.beta[2]).max(1.0) } else { 1.0 };
    Ok(RlctEstimate {
        lambda_hat: fit.beta[1],
        multiplicity_hat,
        stderr_lambda: fit.stderr[1],
        r_squared: fit.r_squared,
        t_grid: config.t_grid.clone(),
        counts,
        used_thresholds: usable,
        seed: config.seed,
        num_samples: config.num_samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub lambda_hat: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Fit `y = intercept + λ·log n` to `(n, F_n − n·S_n)` pairs. Needs at
/// least four distinct sizes spanning two decades.
pub fn estimate_rlct_free_energy(pairs: &[(u64, f64)]) -> Result<SlopeFit, EstimatorError> {
    let mut sizes: Vec<u64> = pairs.iter().map(|&(n, _)| n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 4 {
        return Err(EstimatorError::TooFewSizes(sizes.len()));
    }
    if sizes.iter().any(|&n| n == 0) {
        return Err(EstimatorError::ZeroSamples);
    }
    let span = *sizes.last().unwrap() as f64 / sizes[0] as f64;
    if span < 100.0 {
        return Err(EstimatorError::NarrowSizeRange(span));
    }
    let mut design = Vec::with_capacity(pairs.len());
    let mut y = Vec::with_capacity(pairs.len());
    for &(n, v) in pairs {
        if !v.is_finite() {
            return Err(EstimatorError::NonFiniteValue { n });
        }
        design.push(vec![1.0, (n as f64).ln()]);
        y.push(v);
    }
    let fit = ols(&design, &y).ok_or(EstimatorError::SingularFit)?;
    Ok(SlopeFit { lambda_hat: fit.beta[1], intercept: fit.beta[0], stderr: fit.stderr[1] })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenErrorEstimate {
    pub lambda_hat: f64,
    pub ci_halfwidth: f64,
}

/// `λ̂ = n · mean(G_n)` over replicates, with a 95% normal CI half-width.
/// Needs at least 30 replicates.
pub fn estimate_rlct_gen_error(g_values: &[f64], n: u64) -> Result<GenErrorEstimate, EstimatorError> {
    if n == 0 {
        return Err(EstimatorError::ZeroSamples);
    }
    if g_values.len() < 30 {
        return Err(EstimatorError::TooFewReplicates { got: g_values.len(), need: 30 });
    }
    if let Some(bad) = g_values.iter().find(|v| !v.is_finite()) {
        let _ = bad;
        return Err(EstimatorError::NonFiniteValue { n });
    }
    let reps = g_values.len() as f64;
    let mean = g_values.iter().sum::<f64>() / reps;
    let var = g_values.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (reps - 1.0);
    Ok(GenErrorEstimate {
        lambda_hat: n as f64 * mean,
        ci_halfwidth: 1.96 * n as f64 * (var / reps).sqrt(),
    })
}

struct OlsFit {
    beta: Vec<f64>,
    stderr: Vec<f64>,
    r_squared: f64,
}

/// Ordinary least squares via the normal equations; fine for 2–3 columns.
fn ols(design: &[Vec<f64>], y: &[f64]) -> Option<OlsFit> {
    let k = design.len();
    let p = design[0].len();
    if k <= p {
        return None;
    }
    let mut xtx = vec![vec![0.0f64; p]; p];
    let mut xty = vec![0.0f64; p];
    for (row, &yi) in design.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = invert(&xtx)?;
    let beta: Vec<f64> =
        (0..p).map(|i| (0..p).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let mut rss = 0.0;
    let mean_y = y.iter().sum::<f64>() / k as f64;
    let mut tss = 0.0;
    for (row, &yi) in design.iter().zip(y) {
        let fit: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
        rss += (yi - fit) * (yi - fit);
        tss += (yi - mean_y) * (yi - mean_y);
    }
    let sigma2 = rss / (k - p) as f64;
    let stderr: Vec<f64> = (0..p).map(|i| (sigma2 * inv[i][i]).max(0.0).sqrt()).collect();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Some(OlsFit { beta, stderr, r_squared })
}

/// Gauss-Jordan inverse with partial pivoting for the tiny normal-equation
/// systems.
fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let p = m.len();
    let mut a: Vec<Vec<f64>> = m.iter().cloned().collect();
    let mut inv = vec![vec![0.0; p]; p];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = a[col][col];
        for j in 0..p {
            a[col][j] /= scale;
            inv[col][j] /= scale;
        }
        for i in 0..p {
            if i != col {
                let factor = a[i][col];
                for j in 0..p {
                    a[i][j] -= factor * a[col][j];
                    inv[i][j] -= factor * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}
