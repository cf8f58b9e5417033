//! Divergence kernels between a learner factorization `A·B` and a ground
//! truth `A0·B0`. These are the objective functions whose sublevel-set
//! volumes the RLCT estimators probe, and the population losses the
//! simulators measure.
//!
//! All kernels vanish exactly on `{AB = A0B0}` and are mutually sandwiched
//! by constant multiples of the squared error, so they share one RLCT.

use crate::linalg::symmetric_eigenvalues;
use crate::truth::GroundTruth;
use crate::StochasticMatrix;
use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("learner A is {arows}x{acols}, B is {brows}x{bcols}; truth product is {m}x{n}")]
    ShapeMismatch { arows: usize, acols: usize, brows: usize, bcols: usize, m: usize, n: usize },
    #[error("model puts zero mass on outcome {row} in cell {col} where the truth is positive")]
    DivergentKl { row: usize, col: usize },
    #[error("Bernoulli rate {0} outside the open interval (0,1)")]
    OutOfDomain(f64),
    #[error("model product entry ({row},{col}) = {value} on the closed-boundary of [0,1]")]
    BoundaryEntry { row: usize, col: usize, value: f64 },
    #[error("second-moment matrix is {rows}x{cols}, expected {n}x{n}")]
    MomentShape { rows: usize, cols: usize, n: usize },
    #[error("second-moment matrix is not symmetric at ({i},{j})")]
    MomentNotSymmetric { i: usize, j: usize },
    #[error("second-moment matrix is not positive definite (min eigenvalue {min_eig:e})")]
    MomentNotPositiveDefinite { min_eig: f64 },
}

fn model_product(
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    truth: &GroundTruth,
) -> Result<Array2<f64>, KernelError> {
    if a.rows() != truth.num_outcomes() || b.cols() != truth.num_docs() || a.cols() != b.rows() {
        return Err(KernelError::ShapeMismatch {
            arows: a.rows(),
            acols: a.cols(),
            brows: b.rows(),
            bcols: b.cols(),
            m: truth.num_outcomes(),
            n: truth.num_docs(),
        });
    }
    Ok(a.as_array().dot(b.as_array()))
}

/// Squared Frobenius error `‖AB − A0B0‖²`. The canonical objective Φ.
pub fn sq_error(
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    truth: &GroundTruth,
) -> Result<f64, KernelError> {
    let c = model_product(a, b, truth)?;
    Ok(sq_diff(&c, truth.product()))
}

pub(crate) fn sq_diff(c: &Array2<f64>, c0: &Array2<f64>) -> f64 {
    c.iter().zip(c0.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Population KL divergence of the conditional outcome model: each product
/// column is a distribution over outcomes, weighted by `doc_dist`,
///
/// ```text
/// KL(A,B) = Σ_cells w_j · Σ_outcomes C0_ij · ln(C0_ij / C_ij) .
/// ```
///
/// Finite and ≥ 0 for interior truths; a model entry that is exactly zero
/// where the truth is positive is reported as [`KernelError::DivergentKl`]
/// so sweeps can record the replicate and move on.
pub fn kl_topic(
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    truth: &GroundTruth,
) -> Result<f64, KernelError> {
    let c = model_product(a, b, truth)?;
    kl_columns(&c, truth)
}

pub(crate) fn kl_columns(c: &Array2<f64>, truth: &GroundTruth) -> Result<f64, KernelError> {
    let c0 = truth.product();
    let mut total = 0.0;
    for (col, &w) in truth.doc_dist().iter().enumerate() {
        let mut cell = 0.0;
        for row in 0..c0.nrows() {
            let p = c0[(row, col)];
            let q = c[(row, col)];
            if q <= 0.0 {
                return Err(KernelError::DivergentKl { row, col });
            }
            cell += p * (p.ln() - q.ln());
        }
        total += w * cell;
    }
    // Each cell term is a KL between two distributions, so the weighted sum
    // is nonnegative up to rounding.
    Ok(total.max(0.0))
}

/// KL divergence when every matrix entry is observed under unit Gaussian
/// noise: exactly `Φ/2`.
pub fn kl_gaussian_smf(
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    truth: &GroundTruth,
) -> Result<f64, KernelError> {
    Ok(sq_error(a, b, truth)? / 2.0)
}

/// KL divergence between Bernoulli rates `a` (true) and `b` (model):
/// `a·ln(a/b) + (1−a)·ln((1−a)/(1−b))`. Both rates must be interior.
pub fn kl_bernoulli_pointwise(a: f64, b: f64) -> Result<f64, KernelError> {
    for v in [a, b] {
        if !(v > 0.0 && v < 1.0) {
            return Err(KernelError::OutOfDomain(v));
        }
    }
    Ok((a * (a.ln() - b.ln()) + (1.0 - a) * ((1.0 - a).ln() - (1.0 - b).ln())).max(0.0))
}

/// Entrywise Bernoulli KL between the two products, summed over the matrix.
/// Truth entries are interior by construction; a boundary model entry is
/// reported with its index.
pub fn kl_bernoulli_matrix(
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    truth: &GroundTruth,
) -> Result<f64, KernelError> {
    let c = model_product(a, b, truth)?;
    let c0 = truth.product();
    let mut total = 0.0;
    for col in 0..c0.ncols() {
        for row in 0..c0.nrows() {
            let q = c[(row, col)];
            if !(q > 0.0 && q < 1.0) {
                return Err(KernelError::BoundaryEntry { row, col, value: q });
            }
            total += kl_bernoulli_pointwise(c0[(row, col)], q)?;
        }
    }
    Ok(total)
}

/// KL divergence of the linear channel `y = Cx` driven by inputs with
/// second moment `x_moment`: `½·tr(Δ·X·Δᵀ)` with `Δ = AB − A0B0`.
///
/// `x_moment` must be symmetric positive definite; its extreme eigenvalues
/// (halved) sandwich this kernel against `Φ`. The identity moment gives
/// exactly `Φ/2`.
pub fn kl_markov(
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    truth: &GroundTruth,
    x_moment: &Array2<f64>,
) -> Result<f64, KernelError> {
    let n = truth.num_docs();
    if x_moment.nrows() != n || x_moment.ncols() != n {
        return Err(KernelError::MomentShape { rows: x_moment.nrows(), cols: x_moment.ncols(), n });
    }
    let scale = x_moment.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (x_moment[(i, j)] - x_moment[(j, i)]).abs() > 1e-10 * (1.0 + scale) {
                return Err(KernelError::MomentNotSymmetric { i, j });
            }
        }
    }
    let min_eig = symmetric_eigenvalues(x_moment).last().copied().unwrap_or(0.0);
    if min_eig <= 0.0 {
        return Err(KernelError::MomentNotPositiveDefinite { min_eig });
    }
    let c = model_product(a, b, truth)?;
    let delta = &c - truth.product();
    // tr(Δ X Δᵀ) = Σ_rows row_i · X · row_i
    let mut total = 0.0;
    for i in 0..delta.nrows() {
        let row = delta.row(i);
        for p in 0..n {
            let mut xr = 0.0;
            for q in 0..n {
                xr += x_moment[(p, q)] * row[q];
            }
            total += row[p] * xr;
        }
    }
    Ok(total / 2.0)
}
