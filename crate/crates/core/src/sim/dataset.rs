//! Synthetic corpora drawn from a ground truth.
//!
//! A corpus is a bag of `n` (outcome, document) tokens: document `j` is
//! drawn from the truth's document weights, then outcome `i` from column
//! `j` of the true product matrix. Only the M×N count table matters to
//! every consumer, so that is what we store.

use crate::truth::GroundTruth;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("dataset must contain at least one token")]
    Empty,
    #[error("counts table is empty")]
    NoCells,
    #[error("declared n = {declared} but counts sum to {actual}")]
    TotalMismatch { declared: u64, actual: u64 },
    #[error("doc_totals disagree with column sums at document {0}")]
    BadTotals(usize),
    #[error("Bernoulli model needs product entries strictly inside (0,1); cell ({0},{1}) is not")]
    BernoulliDomain(usize, usize),
}

/// Token counts for one synthetic corpus: `counts[(i, j)]` is the number
/// of occurrences of outcome `i` in document `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset", into = "RawDataset")]
pub struct WordDataset {
    counts: Array2<u64>,
    doc_totals: Vec<u64>,
    n: u64,
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    n: u64,
    counts: Vec<Vec<u64>>,
}

impl TryFrom<RawDataset> for WordDataset {
    type Error = DatasetError;
    fn try_from(raw: RawDataset) -> Result<Self, DatasetError> {
        let rows = raw.counts.len();
        let cols = raw.counts.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(DatasetError::NoCells);
        }
        let mut counts = Array2::zeros((rows, cols));
        for (i, row) in raw.counts.iter().enumerate() {
            if row.len() != cols {
                return Err(DatasetError::NoCells);
            }
            for (j, &c) in row.iter().enumerate() {
                counts[(i, j)] = c;
            }
        }
        let ds = WordDataset::from_counts(counts)?;
        if ds.n != raw.n {
            return Err(DatasetError::TotalMismatch { declared: raw.n, actual: ds.n });
        }
        Ok(ds)
    }
}

impl From<WordDataset> for RawDataset {
    fn from(ds: WordDataset) -> RawDataset {
        RawDataset {
            n: ds.n,
            counts: (0..ds.counts.nrows())
                .map(|i| ds.counts.row(i).to_vec())
                .collect(),
        }
    }
}

impl WordDataset {
    /// An all-zero table is allowed (the empty corpus has a well-defined
    /// marginal likelihood of 1); the generators below still demand n ≥ 1.
    pub fn from_counts(counts: Array2<u64>) -> Result<Self, DatasetError> {
        if counts.is_empty() {
            return Err(DatasetError::NoCells);
        }
        let doc_totals: Vec<u64> = (0..counts.ncols()).map(|j| counts.column(j).sum()).collect();
        let n = doc_totals.iter().sum();
        Ok(WordDataset { counts, doc_totals, n })
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn doc_totals(&self) -> &[u64] {
        &self.doc_totals
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn num_outcomes(&self) -> usize {
        self.counts.nrows()
    }

    pub fn num_docs(&self) -> usize {
        self.counts.ncols()
    }
}

/// Draw an index from a cumulative distribution table.
fn draw_cdf(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn cumsum(p: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    p.map(|x| {
        acc += x;
        acc
    })
    .collect()
}

/// Sample `n` tokens from the truth: document from the document weights,
/// outcome from that document's column of the true product.
pub fn generate_dataset(
    truth: &GroundTruth,
    n: u64,
    rng: &mut ChaCha8Rng,
) -> Result<WordDataset, DatasetError> {
    if n == 0 {
        return Err(DatasetError::Empty);
    }
    let c0 = truth.product();
    let doc_cdf = cumsum(truth.doc_dist().iter().copied());
    let col_cdfs: Vec<Vec<f64>> = (0..c0.ncols())
        .map(|j| cumsum(c0.column(j).iter().copied()))
        .collect();
    let mut counts = Array2::zeros((c0.nrows(), c0.ncols()));
    for _ in 0..n {
        let j = draw_cdf(&doc_cdf, rng);
        let i = draw_cdf(&col_cdfs[j], rng);
        counts[(i, j)] += 1;
    }
    WordDataset::from_counts(counts)
}

/// `−(1/n) Σ counts·log q` — the empirical entropy of the sample under the
/// generating truth.
pub fn empirical_entropy(truth: &GroundTruth, dataset: &WordDataset) -> f64 {
    let c0 = truth.product();
    let mut total = 0.0;
    for ((idx, &c), &q) in dataset.counts().indexed_iter().zip(c0.iter()) {
        debug_assert!(q > 0.0 || c == 0, "token observed off support at {idx:?}");
        if c > 0 {
            total -= c as f64 * q.ln();
        }
    }
    total / dataset.n() as f64
}

/// Observation model for the matrix-valued factorization experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmfModel {
    /// `X = A0·B0 + E`, `E` i.i.d. standard normal per entry.
    Gaussian,
    /// Each entry an independent coin flip with mean `(A0·B0)_{ij}`.
    Bernoulli,
}

/// Draw `n` i.i.d. observed matrices under `model`.
pub fn generate_smf_dataset(
    truth: &GroundTruth,
    n: u64,
    model: SmfModel,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Array2<f64>>, DatasetError> {
    if n == 0 {
        return Err(DatasetError::Empty);
    }
    let c0 = truth.product();
    if model == SmfModel::Bernoulli {
        for ((i, j), &p) in c0.indexed_iter() {
            if !(p > 0.0 && p < 1.0) {
                return Err(DatasetError::BernoulliDomain(i, j));
            }
        }
    }
    Ok((0..n)
        .map(|_| match model {
            SmfModel::Gaussian => {
                c0.map(|&m| m + rng.sample::<f64, _>(StandardNormal))
            }
            SmfModel::Bernoulli => {
                c0.map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
            }
        })
        .collect())
}
