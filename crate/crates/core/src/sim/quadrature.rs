//! Deterministic marginal likelihoods for tiny models.
//!
//! `F_n = −log ∫ prior · likelihood` over the product of simplices, by
//! iterated composite Gauss-Legendre quadrature on the free coordinates.
//! Only models with at most four free parameters are accepted — the cost
//! is (nodes per axis)^d — which covers the learning-curve experiments
//! that need exact free energies. Everything is evaluated in the log
//! domain with a streaming log-sum-exp, so word counts in the thousands
//! (likelihoods near e^{-9000}) are routine.

use super::dataset::WordDataset;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("model has {d} free parameters; quadrature is limited to 4")]
    DimensionTooLarge { d: usize },
    #[error("depth {0} too small; need at least 32 nodes per axis")]
    DepthTooSmall(usize),
    #[error("H must be at least 1")]
    ZeroTopics,
    #[error("concentrations must be positive and finite")]
    BadConcentration,
    #[error("depth doubling moved F_n by {diff:.3e} (relative); raise depth")]
    NotConverged { diff: f64 },
}

/// 8-point Gauss-Legendre rule on [-1, 1] (positive half; mirrored in use).
const GL_X: [f64; 4] =
    [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
const GL_W: [f64; 4] =
    [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];

/// One integration axis: a free coordinate of some simplex block.
struct Integrand<'a> {
    counts: &'a ndarray::Array2<u64>,
    m: usize,
    n_docs: usize,
    h: usize,
    /// Per-block sizes: H blocks of M (columns of A), then N blocks of H.
    blocks: Vec<usize>,
    /// Owning block of each free coordinate, in integration order.
    axes: Vec<usize>,
    alpha: f64,
    beta: f64,
    /// Σ over simplices of the Dirichlet log-normalizer.
    ln_prior_norm: f64,
}

impl Integrand<'_> {
    /// Log prior density + log likelihood at the point given by the free
    /// coordinates `x` (block coordinates completed to full simplices).
    fn log_density(&self, x: &[f64]) -> f64 {
        let mut a = vec![0.0; self.m * self.h];
        let mut b = vec![0.0; self.h * self.n_docs];
        let mut ln_pow = 0.0; // Σ (conc−1)·ln coordinate, all simplices
        let mut idx = 0;
        for (block, &size) in self.blocks.iter().enumerate() {
            let conc = if block < self.h { self.beta } else { self.alpha };
            let mut rest = 1.0;
            for slot in 0..size {
                let v = if slot + 1 < size {
                    let v = x[idx];
                    idx += 1;
                    v
                } else {
                    rest
                };
                if v <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                if conc != 1.0 {
                    ln_pow += (conc - 1.0) * v.ln();
                }
                if block < self.h {
                    a[slot * self.h + block] = v; // A[(slot, block)]
                } else {
                    b[block - self.h + (slot * self.n_docs)] = v; // B[(slot, j)]
                }
                rest -= v;
            }
        }
        let mut ll = 0.0;
        for ((i, j), &c) in self.counts.indexed_iter() {
            if c == 0 {
                continue;
            }
            let mut q = 0.0;
            for k in 0..self.h {
                q += a[i * self.h + k] * b[j + k * self.n_docs];
            }
            if q <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ll += c as f64 * q.ln();
        }
        self.ln_prior_norm + ln_pow + ll
    }
}

/// Streaming log-sum-exp accumulator.
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Recursively integrate axis `a` over `[0, free]`, where `free` is the
/// remaining mass of the axis's simplex block.
fn integrate(
    f: &Integrand,
    a: usize,
    x: &mut [f64],
    remaining: &mut [f64],
    ln_weight: f64,
    panels: usize,
    acc: &mut LogSum,
) {
    if a == x.len() {
        acc.add(ln_weight + f.log_density(x));
        return;
    }
    let block = f.axes[a];
    let ub = remaining[block];
    if ub <= 0.0 {
        return;
    }
    let hp = ub / panels as f64;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * hp;
        for g in 0..GL_X.len() {
            for sign in [-1.0, 1.0] {
                let node = mid + sign * 0.5 * hp * GL_X[g];
                let lw = ln_weight + (0.5 * hp * GL_W[g]).ln();
                x[a] = node;
                remaining[block] -= node;
                integrate(f, a + 1, x, remaining, lw, panels, acc);
                remaining[block] += node;
            }
        }
    }
}

fn free_dim(m: usize, n_docs: usize, h: usize) -> usize {
    h * (m - 1) + n_docs * (h - 1)
}

fn run_quadrature(f: &Integrand, d: usize, nodes_per_axis: usize) -> f64 {
    let panels = nodes_per_axis.div_ceil(8);
    let mut x = vec![0.0; d];
    let mut remaining = vec![1.0; f.blocks.len()];
    let mut acc = LogSum::new();
    integrate(f, 0, &mut x, &mut remaining, 0.0, panels, &mut acc);
    acc.value()
}

/// `F_n` for an `h`-topic learner on `dataset`, with Dirichlet(`beta`)
/// priors on outcome profiles and Dirichlet(`alpha`) priors on document
/// mixtures. `depth` is the node count per axis; the result is checked by
/// doubling it (relative drift above 1e-5 is an error; target 1e-6).
pub fn marginal_likelihood_exact(
    dataset: &WordDataset,
    h: usize,
    alpha: f64,
    beta: f64,
    depth: usize,
) -> Result<f64, QuadratureError> {
    if h == 0 {
        return Err(QuadratureError::ZeroTopics);
    }
    if depth < 32 {
        return Err(QuadratureError::DepthTooSmall(depth));
    }
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(QuadratureError::BadConcentration);
    }
    let (m, n_docs) = (dataset.num_outcomes(), dataset.num_docs());
    let d = free_dim(m, n_docs, h);
    if d > 4 {
        return Err(QuadratureError::DimensionTooLarge { d });
    }
    if d == 0 {
        // d = 0 forces M = H = 1: a point-mass model that assigns every
        // token probability 1, so the marginal likelihood is exactly 1.
        return Ok(0.0);
    }

    let mut blocks = vec![m; h];
    blocks.extend(std::iter::repeat_n(h, n_docs));
    let mut axes = Vec::with_capacity(d);
    for (block, &size) in blocks.iter().enumerate() {
        axes.extend(std::iter::repeat_n(block, size.saturating_sub(1)));
    }
    debug_assert_eq!(axes.len(), d);

    let dirichlet_norm = |k: usize, conc: f64| ln_gamma(k as f64 * conc) - k as f64 * ln_gamma(conc);
    let ln_prior_norm =
        h as f64 * dirichlet_norm(m, beta) + n_docs as f64 * dirichlet_norm(h, alpha);

    let f = Integrand {
        counts: dataset.counts(),
        m,
        n_docs,
        h,
        blocks,
        axes,
        alpha,
        beta,
        ln_prior_norm,
    };
    let coarse = run_quadrature(&f, d, depth);
    let fine = run_quadrature(&f, d, depth * 2);
    let diff = (coarse - fine).abs() / fine.abs().max(1.0);
    if diff > 1e-5 {
        return Err(QuadratureError::NotConverged { diff });
    }
    Ok(-fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    /// Closed-form `F_n` for a one-topic learner under uniform priors:
    /// the Dirichlet-multinomial −ln[(M−1)!·Π r_i!/(n+M−1)!].
    fn single_topic_oracle(dataset: &WordDataset) -> f64 {
        let m = dataset.num_outcomes() as f64;
        let n = dataset.n() as f64;
        let mut ln_value = ln_gamma(m) - ln_gamma(n + m);
        for i in 0..dataset.num_outcomes() {
            let r: u64 = dataset.counts().row(i).sum();
            ln_value += ln_gamma(r as f64 + 1.0);
        }
        -ln_value
    }

    #[test]
    fn empty_corpus_has_zero_free_energy() {
        let ds = WordDataset::from_counts(Array2::zeros((2, 2))).unwrap();
        let f = marginal_likelihood_exact(&ds, 1, 1.0, 1.0, 64).unwrap();
        assert_abs_diff_eq!(f, 0.0, epsilon = 1e-9);
        let f2 = marginal_likelihood_exact(&ds, 2, 1.0, 1.0, 32).unwrap();
        assert_abs_diff_eq!(f2, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn single_word_gives_log_two() {
        // One token on a two-outcome vocabulary, one topic: the integral
        // is ∫ φ dφ = 1/2.
        let ds = WordDataset::from_counts(array![[1u64, 0], [0, 0]]).unwrap();
        let f = marginal_likelihood_exact(&ds, 1, 1.0, 1.0, 64).unwrap();
        assert_abs_diff_eq!(f, 2.0f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn matches_dirichlet_multinomial_closed_form() {
        for (counts, depth) in [
            (array![[5u64, 3], [2, 7]], 64),
            (array![[40u64, 31], [22, 17]], 128),
            (array![[400u64, 310], [220, 170]], 512),
        ] {
            let ds = WordDataset::from_counts(counts).unwrap();
            let want = single_topic_oracle(&ds);
            let got = marginal_likelihood_exact(&ds, 1, 1.0, 1.0, depth).unwrap();
            assert_abs_diff_eq!(got, want, epsilon = 1e-6 * want.abs().max(1.0));
        }
    }

    #[test]
    fn three_outcome_closed_form_uses_triangle_domain() {
        let ds = WordDataset::from_counts(array![[6u64], [3], [1]]).unwrap();
        let want = single_topic_oracle(&ds);
        let got = marginal_likelihood_exact(&ds, 1, 1.0, 1.0, 64).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-6 * want.abs());
    }

    #[test]
    fn two_topic_learner_on_four_free_parameters_converges() {
        let ds = WordDataset::from_counts(array![[9u64, 2], [3, 8]]).unwrap();
        let f = marginal_likelihood_exact(&ds, 2, 1.0, 1.0, 32).unwrap();
        // Sanity bounds: between the best single point mass and zero.
        assert!(f > 0.0);
        let n = ds.n() as f64;
        assert!(f < n * (2.0f64).ln() + 10.0, "F = {f}");
        // A 2-topic learner must not lose to the 1-topic sub-model by more
        // than the prior mass it spreads; F should not exceed the H=1 value
        // by much, and with these counts should be close to it.
        let f1 = marginal_likelihood_exact(&ds, 1, 1.0, 1.0, 128).unwrap();
        assert!((f - f1).abs() < 3.0, "F2 = {f}, F1 = {f1}");
    }

    #[test]
    fn nonuniform_concentrations_shift_the_marginal() {
        // Against the Dirichlet-multinomial with β=2 on two outcomes:
        // ∫ Γ(4)/Γ(2)² φ^{1+r1}(1−φ)^{1+r2} = 6·(r1+1)!(r2+1)!/(n+3)!.
        let ds = WordDataset::from_counts(array![[4u64], [2]]).unwrap();
        let want = -(6.0f64.ln() + ln_gamma(6.0) + ln_gamma(4.0) - ln_gamma(10.0));
        let got = marginal_likelihood_exact(&ds, 1, 1.0, 2.0, 64).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-8);
    }

    #[test]
    fn guards_reject_bad_inputs() {
        let ds = WordDataset::from_counts(array![[1u64, 1], [1, 1]]).unwrap();
        // 2x2 data with h=3: d = 3·(2−1) + 2·(3−1) = 7 > 4.
        assert_eq!(
            marginal_likelihood_exact(&ds, 3, 1.0, 1.0, 64),
            Err(QuadratureError::DimensionTooLarge { d: 7 })
        );
        assert_eq!(
            marginal_likelihood_exact(&ds, 1, 1.0, 1.0, 16),
            Err(QuadratureError::DepthTooSmall(16))
        );
        assert_eq!(
            marginal_likelihood_exact(&ds, 0, 1.0, 1.0, 64),
            Err(QuadratureError::ZeroTopics)
        );
        assert_eq!(
            marginal_likelihood_exact(&ds, 1, -1.0, 1.0, 64),
            Err(QuadratureError::BadConcentration)
        );
    }
}
