//! Posterior simulation: synthetic corpora, collapsed Gibbs, quadrature
//! marginals, and Metropolis posteriors for factorization models.
//!
//! The learning-curve experiments all reduce to the same loop — draw a
//! corpus from the truth, fit the posterior, measure the predictive KL —
//! which [`expected_gen_error`] runs over independent replicates, one
//! ChaCha stream per replicate so results never depend on scheduling.

pub mod dataset;
pub mod gibbs;
pub mod metropolis;
pub mod quadrature;

pub use dataset::{
    empirical_entropy, generate_dataset, generate_smf_dataset, DatasetError, SmfModel, WordDataset,
};
pub use gibbs::{collapsed_gibbs, generalization_error, GibbsError, PosteriorSummary};
pub use metropolis::{mh_posterior_smf, smf_generalization_error, MhError, SmfPosterior};
pub use quadrature::{marginal_likelihood_exact, QuadratureError};

use crate::truth::GroundTruth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Gibbs(#[from] GibbsError),
    #[error("need at least 30 replicates, got {0}")]
    TooFewReplicates(usize),
}

/// Chain-length settings for the collapsed Gibbs runs inside replicated
/// experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub sweeps: usize,
    pub burnin: usize,
    pub thin: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig { sweeps: 600, burnin: 200, thin: 4, alpha: 1.0, beta: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GenErrorSummary {
    pub mean: f64,
    /// 95% normal half-width over the non-divergent replicates.
    pub ci_halfwidth: f64,
    pub per_replicate: Vec<f64>,
    /// Replicates whose predictive lost mass on the truth's support.
    pub divergent_count: usize,
}

/// Mean generalization error of an `h`-topic learner at sample size `n`,
/// over independent corpus/posterior replicates. Replicate `r` draws from
/// ChaCha stream `r+1` of `master_seed`, so the result is reproducible
/// regardless of how rayon schedules the work.
pub fn expected_gen_error(
    truth: &GroundTruth,
    h: usize,
    n: u64,
    replicates: usize,
    gibbs: &GibbsConfig,
    master_seed: u64,
) -> Result<GenErrorSummary, SimError> {
    if replicates < 30 {
        return Err(SimError::TooFewReplicates(replicates));
    }
    let runs: Vec<Result<Option<f64>, SimError>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(r + 1);
            let ds = generate_dataset(truth, n, &mut rng)?;
            let summary = collapsed_gibbs(
                &ds,
                h,
                gibbs.alpha,
                gibbs.beta,
                gibbs.sweeps,
                gibbs.burnin,
                gibbs.thin,
                &mut rng,
            )?;
            match generalization_error(truth, &summary) {
                Ok(g) => Ok(Some(g)),
                Err(GibbsError::Divergent(_, _)) => Ok(None),
                Err(e) => Err(SimError::Gibbs(e)),
            }
        })
        .collect();

    let mut per_replicate = Vec::with_capacity(replicates);
    let mut divergent_count = 0usize;
    for run in runs {
        match run? {
            Some(g) => per_replicate.push(g),
            None => divergent_count += 1,
        }
    }
    let k = per_replicate.len() as f64;
    let mean = per_replicate.iter().sum::<f64>() / k;
    let var = per_replicate.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (k - 1.0);
    Ok(GenErrorSummary {
        mean,
        ci_halfwidth: 1.96 * (var / k).sqrt(),
        per_replicate,
        divergent_count,
    })
}
