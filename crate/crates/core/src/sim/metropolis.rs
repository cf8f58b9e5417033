//! Random-walk Metropolis over the factor simplices for matrix
//! observation models (Gaussian noise or Bernoulli entries).
//!
//! The chain walks the free coordinates of one uniformly chosen factor
//! column per step: Gaussian jitter, reflected into [0,1]; proposals whose
//! coordinates exceed the simplex are off the prior's support and are
//! rejected, which keeps the kernel reversible with respect to the uniform
//! prior. Likelihoods are evaluated from sufficient statistics, so the
//! cost per step is independent of the number of observed matrices.

use super::dataset::SmfModel;
use crate::kernels::{kl_bernoulli_pointwise, sq_diff};
use crate::truth::GroundTruth;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MhError {
    #[error("need at least one observed matrix")]
    NoData,
    #[error("observed matrices must share one shape; matrix {index} is {rows}x{cols}")]
    ShapeMismatch { index: usize, rows: usize, cols: usize },
    #[error("H must be at least 1")]
    ZeroInner,
    #[error("steps = {0} too few; need at least 10000")]
    TooFewSteps(usize),
    #[error("proposal scale must be positive and finite")]
    BadScale,
    #[error("interior margin must lie in [0, 0.5)")]
    BadMargin,
    #[error("Bernoulli data must be 0/1; matrix {index} cell ({row},{col}) = {value}")]
    NotBinary { index: usize, row: usize, col: usize, value: f64 },
    #[error("posterior mean has an entry outside (0,1); cannot evaluate Bernoulli KL")]
    MeanOutOfDomain,
}

/// Posterior summary for a factorization chain: the retained-step mean of
/// the product `A·B` plus tuning diagnostics.
#[derive(Clone, Debug)]
pub struct SmfPosterior {
    /// Mean of `A·B` over retained steps; column-stochastic like every
    /// individual product.
    pub posterior_mean: Array2<f64>,
    pub acceptance_rate: f64,
    pub n_retained: usize,
    pub warnings: Vec<String>,
}

enum Stats {
    /// Observation count and entrywise mean of the data.
    Gaussian { n: f64, mean: Array2<f64> },
    /// Observation count and entrywise count of ones.
    Bernoulli { n: f64, ones: Array2<f64> },
}

impl Stats {
    fn log_likelihood(&self, p: &Array2<f64>, margin: f64) -> f64 {
        match self {
            Stats::Gaussian { n, mean } => {
                let mut dot = 0.0;
                let mut norm2 = 0.0;
                for (x, m) in p.iter().zip(mean.iter()) {
                    dot += x * m;
                    norm2 += x * x;
                }
                n * (dot - 0.5 * norm2)
            }
            Stats::Bernoulli { n, ones } => {
                let mut ll = 0.0;
                for (&q, &s) in p.iter().zip(ones.iter()) {
                    if q < margin || q > 1.0 - margin {
                        return f64::NEG_INFINITY;
                    }
                    if s > 0.0 {
                        if q <= 0.0 {
                            return f64::NEG_INFINITY;
                        }
                        ll += s * q.ln();
                    }
                    if s < *n {
                        if q >= 1.0 {
                            return f64::NEG_INFINITY;
                        }
                        ll += (n - s) * (1.0 - q).ln();
                    }
                }
                ll
            }
        }
    }
}

fn reflect_unit(mut x: f64) -> f64 {
    // Fold into [0,1]; the map is an involution on each branch, so the
    // proposal stays symmetric.
    while x < 0.0 || x > 1.0 {
        if x < 0.0 {
            x = -x;
        }
        if x > 1.0 {
            x = 2.0 - x;
        }
    }
    x
}

/// Perturb the free coordinates of `col` (all but the last entry); returns
/// false if the proposal leaves the simplex.
fn propose_column(
    col: &mut [f64],
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let free = col.len() - 1;
    if free == 0 {
        return false; // Sim(1) has no freedom; nothing to move
    }
    let mut sum = 0.0;
    for v in col.iter_mut().take(free) {
        *v = reflect_unit(*v + scale * rng.sample::<f64, _>(StandardNormal));
        sum += *v;
    }
    if sum > 1.0 {
        return false;
    }
    col[free] = 1.0 - sum;
    true
}

/// Posterior over rank-`h` stochastic factorizations given observed
/// matrices, via random-walk Metropolis. The first fifth of `steps` is
/// burn-in; every later step contributes to the posterior mean.
pub fn mh_posterior_smf(
    datasets: &[Array2<f64>],
    model: SmfModel,
    h: usize,
    steps: usize,
    proposal_scale: f64,
    interior_margin: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SmfPosterior, MhError> {
    let first = datasets.first().ok_or(MhError::NoData)?;
    let (m, n_cols) = (first.nrows(), first.ncols());
    for (index, x) in datasets.iter().enumerate() {
        if x.nrows() != m || x.ncols() != n_cols {
            return Err(MhError::ShapeMismatch { index, rows: x.nrows(), cols: x.ncols() });
        }
    }
    if h == 0 {
        return Err(MhError::ZeroInner);
    }
    if steps < 10_000 {
        return Err(MhError::TooFewSteps(steps));
    }
    if !(proposal_scale > 0.0 && proposal_scale.is_finite()) {
        return Err(MhError::BadScale);
    }
    if !(0.0..0.5).contains(&interior_margin) {
        return Err(MhError::BadMargin);
    }

    let n = datasets.len() as f64;
    let stats = match model {
        SmfModel::Gaussian => {
            let mut mean = Array2::zeros((m, n_cols));
            for x in datasets {
                mean += x;
            }
            Stats::Gaussian { n, mean: mean / n }
        }
        SmfModel::Bernoulli => {
            let mut ones = Array2::zeros((m, n_cols));
            for (index, x) in datasets.iter().enumerate() {
                for ((row, col), &value) in x.indexed_iter() {
                    if value == 1.0 {
                        ones[(row, col)] += 1.0;
                    } else if value != 0.0 {
                        return Err(MhError::NotBinary { index, row, col, value });
                    }
                }
            }
            Stats::Bernoulli { n, ones }
        }
    };

    // Start at the barycenter of every simplex.
    let mut a = Array2::from_elem((m, h), 1.0 / m as f64);
    let mut b = Array2::from_elem((h, n_cols), 1.0 / h as f64);
    let mut ll = stats.log_likelihood(&a.dot(&b), interior_margin);

    // Columns on Sim(1) have no freedom; never propose on them.
    let mut movable: Vec<(bool, usize)> = Vec::new();
    if m >= 2 {
        movable.extend((0..h).map(|k| (true, k)));
    }
    if h >= 2 {
        movable.extend((0..n_cols).map(|j| (false, j)));
    }
    let burnin = steps / 5;
    if movable.is_empty() {
        // The parameter space is a single point; the posterior is trivial.
        return Ok(SmfPosterior {
            posterior_mean: a.dot(&b),
            acceptance_rate: 1.0,
            n_retained: steps - burnin,
            warnings: Vec::new(),
        });
    }

    let mut accepted = 0usize;
    let mut mean = Array2::<f64>::zeros((m, n_cols));
    let mut n_retained = 0usize;
    let mut col_buf = vec![0.0; m.max(h)];

    for step in 0..steps {
        let (in_a, col_idx) = movable[rng.random_range(0..movable.len())];
        let target_len = if in_a { m } else { h };
        let buf = &mut col_buf[..target_len];
        {
            let src = if in_a { &a } else { &b };
            for (r, v) in buf.iter_mut().enumerate() {
                *v = src[(r, col_idx)];
            }
        }
        if propose_column(buf, proposal_scale, rng) {
            let mut old = vec![0.0; target_len];
            {
                let dst = if in_a { &mut a } else { &mut b };
                for (r, &v) in buf.iter().enumerate() {
                    old[r] = dst[(r, col_idx)];
                    dst[(r, col_idx)] = v;
                }
            }
            let ll_new = stats.log_likelihood(&a.dot(&b), interior_margin);
            if ll_new - ll >= 0.0 || rng.random::<f64>().ln() < ll_new - ll {
                ll = ll_new;
                accepted += 1;
            } else {
                let dst = if in_a { &mut a } else { &mut b };
                for (r, v) in old.into_iter().enumerate() {
                    dst[(r, col_idx)] = v;
                }
            }
        }
        if step >= burnin {
            mean += &a.dot(&b);
            n_retained += 1;
        }
    }

    mean /= n_retained as f64;
    let acceptance_rate = accepted as f64 / steps as f64;
    let mut warnings = Vec::new();
    if !(0.05..=0.8).contains(&acceptance_rate) {
        warnings.push(format!(
            "acceptance rate {acceptance_rate:.3} outside [0.05, 0.8]; retune proposal_scale"
        ));
    }
    Ok(SmfPosterior { posterior_mean: mean, acceptance_rate, n_retained, warnings })
}

/// Plug-in generalization error of the posterior-mean product against the
/// truth, under the observation model's KL geometry.
pub fn smf_generalization_error(
    truth: &GroundTruth,
    posterior: &SmfPosterior,
    model: SmfModel,
) -> Result<f64, MhError> {
    let c0 = truth.product();
    let p = &posterior.posterior_mean;
    if p.nrows() != c0.nrows() || p.ncols() != c0.ncols() {
        return Err(MhError::ShapeMismatch { index: 0, rows: p.nrows(), cols: p.ncols() });
    }
    match model {
        SmfModel::Gaussian => Ok(0.5 * sq_diff(p, c0)),
        SmfModel::Bernoulli => {
            let mut total = 0.0;
            for (&q, &ph) in c0.iter().zip(p.iter()) {
                total += kl_bernoulli_pointwise(q, ph)
                    .map_err(|_| MhError::MeanOutOfDomain)?;
            }
            Ok(total)
        }
    }
}
