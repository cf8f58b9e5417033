//! The data-generating truth: a column-stochastic factorization `A0·B0` of
//! inner dimension `H0`, kept away from the simplex boundary, plus the
//! distribution over conditioning cells.
//!
//! Orientation: each column of the `M×N` product is a probability
//! distribution over the `M` row outcomes. The simulator treats the column
//! index as the observed conditioning variable (a "document" emitting
//! outcomes from an `M`-symbol vocabulary), so `doc_dist` has length `N` and
//! weights columns.

use crate::linalg::numerical_rank;
use crate::matrix::{random_stochastic, MatrixError, StochasticMatrix};
use crate::ModelDims;
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for the product-rank check.
pub const RANK_TOL: f64 = 1e-8;
/// Minimum L2 distance between distinct columns of `A0`.
pub const COLUMN_SEPARATION: f64 = 1e-3;
/// Tolerance on the `doc_dist` sum.
const DOC_DIST_TOL: f64 = 1e-12;
/// Redraw budget for [`GroundTruth::random`].
const GENERATION_CAP: usize = 500;

#[derive(Debug, Error, PartialEq)]
pub enum TruthError {
    #[error("A0 is {arows}x{acols} but B0 is {brows}x{bcols}; need A0.cols == B0.rows")]
    FactorShapes { arows: usize, acols: usize, brows: usize, bcols: usize },
    #[error("delta must lie in (0, 1/2), got {0}")]
    BadDelta(f64),
    #[error("{matrix} entry ({row},{col}) = {value} outside [delta, 1-delta] = [{delta}, {}]", 1.0 - delta)]
    OutsideInterior { matrix: &'static str, row: usize, col: usize, value: f64, delta: f64 },
    #[error("doc_dist has {got} entries, expected one per product column ({want})")]
    DocDistLength { got: usize, want: usize },
    #[error("doc_dist[{index}] = {value} must be strictly positive")]
    DocDistEntry { index: usize, value: f64 },
    #[error("doc_dist sums to {0}, not 1")]
    DocDistSum(f64),
    #[error("product rank {rank} below inner dimension {h0}: the factorization is not minimal")]
    RankDeficient { rank: usize, h0: usize },
    #[error("columns {a} and {b} of A0 are {dist:e} apart, below the {COLUMN_SEPARATION:e} separation floor")]
    DuplicateColumns { a: usize, b: usize, dist: f64 },
    #[error("inner dimension {h0} exceeds min(M,N) = {cap}; no minimal truth exists")]
    RankImpossible { h0: usize, cap: usize },
    #[error("no minimal truth found after {GENERATION_CAP} draws")]
    GenerationFailed,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTruth", into = "RawTruth")]
pub struct GroundTruth {
    a0: StochasticMatrix,
    b0: StochasticMatrix,
    doc_dist: Vec<f64>,
    delta: f64,
    seed: Option<u64>,
    // Cached A0·B0; rebuilt by the RawTruth conversion on deserialization.
    product: Array2<f64>,
}

/// Serialized bundle; `seed` records provenance when the truth was drawn.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawTruth {
    a0: StochasticMatrix,
    b0: StochasticMatrix,
    doc_dist: Vec<f64>,
    delta: f64,
    seed: Option<u64>,
}

impl GroundTruth {
    pub fn new(
        a0: StochasticMatrix,
        b0: StochasticMatrix,
        doc_dist: Vec<f64>,
        delta: f64,
    ) -> Result<Self, TruthError> {
        if a0.cols() != b0.rows() {
            return Err(TruthError::FactorShapes {
                arows: a0.rows(),
                acols: a0.cols(),
                brows: b0.rows(),
                bcols: b0.cols(),
            });
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(TruthError::BadDelta(delta));
        }
        check_interior("A0", &a0, delta)?;
        check_interior("B0", &b0, delta)?;
        if doc_dist.len() != b0.cols() {
            return Err(TruthError::DocDistLength { got: doc_dist.len(), want: b0.cols() });
        }
        for (index, &value) in doc_dist.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(TruthError::DocDistEntry { index, value });
            }
        }
        let sum: f64 = doc_dist.iter().sum();
        if (sum - 1.0).abs() > DOC_DIST_TOL {
            return Err(TruthError::DocDistSum(sum));
        }
        let h0 = a0.cols();
        let product = a0.as_array().dot(b0.as_array());
        check_minimal(&a0, &product, h0)?;
        Ok(GroundTruth { a0, b0, doc_dist, delta, seed: None, product })
    }

    /// `new` with the uniform distribution over columns.
    pub fn with_uniform_docs(
        a0: StochasticMatrix,
        b0: StochasticMatrix,
        delta: f64,
    ) -> Result<Self, TruthError> {
        let n = b0.cols();
        GroundTruth::new(a0, b0, vec![1.0 / n as f64; n], delta)
    }

    /// Draw a minimal truth for `dims` (only `M`, `N`, `H0` matter) with the
    /// uniform column distribution, redrawing until the minimality heuristic
    /// passes.
    pub fn random(dims: ModelDims, delta: f64, rng: &mut impl Rng) -> Result<Self, TruthError> {
        let (m, n, h0) = (dims.m() as usize, dims.n() as usize, dims.h0() as usize);
        if h0 > m.min(n) {
            return Err(TruthError::RankImpossible { h0, cap: m.min(n) });
        }
        for _ in 0..GENERATION_CAP {
            let a0 = random_stochastic(m, h0, delta, rng)?;
            let b0 = random_stochastic(h0, n, delta, rng)?;
            match GroundTruth::with_uniform_docs(a0, b0, delta) {
                Ok(truth) => return Ok(truth),
                Err(TruthError::RankDeficient { .. }) | Err(TruthError::DuplicateColumns { .. }) => {
                    continue
                }
                Err(other) => return Err(other),
            }
        }
        Err(TruthError::GenerationFailed)
    }

    /// Same as [`GroundTruth::random`] but with a recorded seed.
    pub fn random_seeded(dims: ModelDims, delta: f64, seed: u64) -> Result<Self, TruthError> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut truth = GroundTruth::random(dims, delta, &mut rng)?;
        truth.seed = Some(seed);
        Ok(truth)
    }

    pub fn a0(&self) -> &StochasticMatrix {
        &self.a0
    }

    pub fn b0(&self) -> &StochasticMatrix {
        &self.b0
    }

    /// The cached product `A0·B0` (`M×N`, column-stochastic).
    pub fn product(&self) -> &Array2<f64> {
        &self.product
    }

    /// Weights of the conditioning cells (product columns); strictly
    /// positive, summing to 1.
    pub fn doc_dist(&self) -> &[f64] {
        &self.doc_dist
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Vocabulary size of the emitted symbols = product rows = `M`.
    pub fn num_outcomes(&self) -> usize {
        self.a0.rows()
    }

    /// Number of conditioning cells = product columns = `N`.
    pub fn num_docs(&self) -> usize {
        self.b0.cols()
    }

    pub fn inner_dim(&self) -> usize {
        self.a0.cols()
    }
}

fn check_interior(
    name: &'static str,
    m: &StochasticMatrix,
    delta: f64,
) -> Result<(), TruthError> {
    // A single-row stochastic matrix is identically 1; that degenerate case
    // is allowed (it carries no parameters).
    if m.rows() < 2 {
        return Ok(());
    }
    for col in 0..m.cols() {
        for row in 0..m.rows() {
            let value = m.entry(row, col);
            if value < delta || value > 1.0 - delta {
                return Err(TruthError::OutsideInterior { matrix: name, row, col, value, delta });
            }
        }
    }
    Ok(())
}

fn check_minimal(
    a0: &StochasticMatrix,
    product: &Array2<f64>,
    h0: usize,
) -> Result<(), TruthError> {
    let rank = numerical_rank(product, RANK_TOL);
    if rank < h0 {
        return Err(TruthError::RankDeficient { rank, h0 });
    }
    for a in 0..a0.cols() {
        for b in (a + 1)..a0.cols() {
            let dist: f64 = (0..a0.rows())
                .map(|r| (a0.entry(r, a) - a0.entry(r, b)).powi(2))
                .sum::<f64>()
                .sqrt();
            if dist < COLUMN_SEPARATION {
                return Err(TruthError::DuplicateColumns { a, b, dist });
            }
        }
    }
    Ok(())
}

impl TryFrom<RawTruth> for GroundTruth {
    type Error = TruthError;
    fn try_from(raw: RawTruth) -> Result<Self, TruthError> {
        let mut truth = GroundTruth::new(raw.a0, raw.b0, raw.doc_dist, raw.delta)?;
        truth.seed = raw.seed;
        Ok(truth)
    }
}

impl From<GroundTruth> for RawTruth {
    fn from(t: GroundTruth) -> RawTruth {
        RawTruth { a0: t.a0, b0: t.b0, doc_dist: t.doc_dist, delta: t.delta, seed: t.seed }
    }
}
