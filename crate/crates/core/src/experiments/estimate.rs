//! `estimate` command: measure λ by one of three routes and report it next
//! to the closed-form target for the configured shape.
//!
//! * `volume` — sublevel-volume scaling of the factorization error under
//!   the uniform prior (no data involved).
//! * `gen-error` — λ̂ = n·mean(Gₙ) over replicated corpus/posterior runs at
//!   the largest configured sample size.
//! * `free-energy` — exact quadrature marginal likelihoods across the whole
//!   n-grid, slope of the normalized free energy against log n. Only
//!   available while the parameter dimension stays quadrature-sized (≤ 4).

use std::path::Path;

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::bound_table::frac;
use super::config::ExperimentConfig;
use super::{write_atomic, ExperimentError};
use crate::bounds::{param_dim, rlct_exact, rlct_upper_bound};
use crate::estimator::{
    estimate_rlct_free_energy, estimate_rlct_gen_error, estimate_rlct_smf, RlctEstimate, SlopeFit,
};
use crate::sim::{
    empirical_entropy, expected_gen_error, generate_dataset, marginal_likelihood_exact,
};
use crate::ModelDims;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMethod {
    Volume,
    GenError,
    FreeEnergy,
}

impl EstimateMethod {
    pub fn name(self) -> &'static str {
        match self {
            EstimateMethod::Volume => "volume",
            EstimateMethod::GenError => "gen-error",
            EstimateMethod::FreeEnergy => "free-energy",
        }
    }
}

impl std::str::FromStr for EstimateMethod {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "volume" => Ok(EstimateMethod::Volume),
            "gen-error" => Ok(EstimateMethod::GenError),
            "free-energy" => Ok(EstimateMethod::FreeEnergy),
            other => Err(ExperimentError::Config(format!(
                "unknown method `{other}` (expected volume, gen-error, free-energy)"
            ))),
        }
    }
}

/// Closed-form values the estimate is compared against.
#[derive(Clone, Debug, Serialize)]
pub struct TargetInfo {
    pub lambda_bar: String,
    pub lambda_bar_dec: f64,
    pub lambda_exact: Option<String>,
    pub lambda_exact_dec: Option<f64>,
    pub exact_case: Option<String>,
    pub param_dim: i64,
}

impl TargetInfo {
    pub fn for_dims(dims: ModelDims) -> TargetInfo {
        let bar = rlct_upper_bound(dims);
        let exact = rlct_exact(dims);
        TargetInfo {
            lambda_bar: frac(&bar),
            lambda_bar_dec: bar.to_f64().expect("small rational"),
            lambda_exact: exact.map(|(v, _)| frac(&v)),
            lambda_exact_dec: exact.map(|(v, _)| v.to_f64().expect("small rational")),
            exact_case: exact.map(|(_, c)| c.to_string()),
            param_dim: param_dim(dims),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GenErrorSection {
    pub n: u64,
    pub replicates: usize,
    pub divergent_count: usize,
    pub mean_gen_error: f64,
    pub lambda_hat: f64,
    pub ci_halfwidth: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FreeEnergySection {
    pub replicates: usize,
    pub quadrature_depth: usize,
    pub fit: SlopeFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub config_sha256: String,
    pub dims: ModelDims,
    pub method: String,
    pub target: TargetInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume: Option<RlctEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gen_error: Option<GenErrorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub free_energy: Option<FreeEnergySection>,
}

impl EstimateReport {
    /// Point estimate of the method that ran.
    pub fn lambda_hat(&self) -> f64 {
        if let Some(v) = &self.volume {
            v.lambda_hat
        } else if let Some(g) = &self.gen_error {
            g.lambda_hat
        } else {
            self.free_energy.as_ref().expect("one section is set").fit.lambda_hat
        }
    }

    pub fn summary_line(&self) -> String {
        let target = match &self.target.lambda_exact {
            Some(v) => format!("exact {v}"),
            None => format!("bound {}", self.target.lambda_bar),
        };
        format!("method {}: lambda_hat = {:.4} ({})", self.method, self.lambda_hat(), target)
    }
}

/// Per-axis node count for the quadrature, shrunk with the dimension to
/// keep total work near a few million density evaluations.
fn quadrature_depth(d: i64) -> usize {
    match d {
        1 => 2048,
        2 => 256,
        3 => 96,
        _ => 48,
    }
}

/// Runs the chosen estimate and writes `estimate_<method>.json` plus a
/// method-specific curve CSV under `out_dir`.
pub fn run_estimate(
    config: &ExperimentConfig,
    method: EstimateMethod,
    out_dir: &Path,
) -> Result<EstimateReport, ExperimentError> {
    config.validate()?;
    let dims = config.dims;
    let hash = config.sha256();

    // Method/shape incompatibilities are rejected before any sampling.
    if method == EstimateMethod::FreeEnergy {
        let d = param_dim(dims);
        if d > 4 {
            return Err(ExperimentError::Guard(format!(
                "free-energy quadrature handles parameter dimension <= 4; \
                 this shape has d = {d} — use the gen-error route"
            )));
        }
        let distinct = config.n_grid.len();
        let span = *config.n_grid.last().unwrap() as f64 / config.n_grid[0] as f64;
        if distinct < 4 || span < 100.0 {
            return Err(ExperimentError::Config(format!(
                "free-energy slope needs >= 4 sample sizes spanning a factor of 100; \
                 n_grid has {distinct} sizes spanning {span:.1}x"
            )));
        }
    }
    if method == EstimateMethod::GenError && config.replicates < 30 {
        return Err(ExperimentError::Config(format!(
            "gen-error needs at least 30 replicates, config has {}",
            config.replicates
        )));
    }

    let truth = config.ground_truth()?;
    let mut report = EstimateReport {
        config_sha256: hash.clone(),
        dims,
        method: method.name().to_string(),
        target: TargetInfo::for_dims(dims),
        volume: None,
        gen_error: None,
        free_energy: None,
    };
    let mut curve = String::new();
    curve.push_str(&format!("# config_sha256={hash}\n"));

    match method {
        EstimateMethod::Volume => {
            let est = estimate_rlct_smf(dims, &truth, &config.estimator)?;
            curve.push_str("t,hits,volume_fraction\n");
            for (t, hits) in est.t_grid.iter().zip(&est.counts) {
                let fraction = *hits as f64 / est.num_samples as f64;
                curve.push_str(&format!("{t},{hits},{fraction}\n"));
            }
            report.volume = Some(est);
        }
        EstimateMethod::GenError => {
            let n = *config.n_grid.last().unwrap();
            let summary = expected_gen_error(
                &truth,
                dims.h() as usize,
                n,
                config.replicates,
                &config.sampler,
                config.master_seed,
            )?;
            if summary.divergent_count * 10 > config.replicates {
                return Err(ExperimentError::PartialFailure {
                    failed: summary.divergent_count,
                    total: config.replicates,
                });
            }
            let est = estimate_rlct_gen_error(&summary.per_replicate, n)?;
            curve.push_str("replicate,gen_error\n");
            for (i, g) in summary.per_replicate.iter().enumerate() {
                curve.push_str(&format!("{i},{g}\n"));
            }
            report.gen_error = Some(GenErrorSection {
                n,
                replicates: config.replicates,
                divergent_count: summary.divergent_count,
                mean_gen_error: summary.mean,
                lambda_hat: est.lambda_hat,
                ci_halfwidth: est.ci_halfwidth,
            });
        }
        EstimateMethod::FreeEnergy => {
            let depth = quadrature_depth(param_dim(dims));
            let reps = config.replicates;
            let mut pairs = Vec::with_capacity(config.n_grid.len() * reps);
            curve.push_str("n,replicate,normalized_free_energy\n");
            for (i, &n) in config.n_grid.iter().enumerate() {
                for rep in 0..reps {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
                    rng.set_stream((i * reps + rep) as u64 + 1);
                    let ds = generate_dataset(&truth, n, &mut rng)?;
                    let f = marginal_likelihood_exact(
                        &ds,
                        dims.h() as usize,
                        config.sampler.alpha,
                        config.sampler.beta,
                        depth,
                    )?;
                    let normalized = f - n as f64 * empirical_entropy(&truth, &ds);
                    curve.push_str(&format!("{n},{rep},{normalized}\n"));
                    pairs.push((n, normalized));
                }
            }
            let fit = estimate_rlct_free_energy(&pairs)?;
            report.free_energy =
                Some(FreeEnergySection { replicates: reps, quadrature_depth: depth, fit });
        }
    }

    std::fs::create_dir_all(out_dir)
        .map_err(|source| ExperimentError::Io { path: out_dir.to_path_buf(), source })?;
    let stem = format!("estimate_{}", method.name());
    write_atomic(
        &out_dir.join(format!("{stem}.json")),
        &serde_json::to_vec_pretty(&report).expect("report serializes"),
    )?;
    write_atomic(&out_dir.join(format!("{stem}_curve.csv")), curve.as_bytes())?;
    Ok(report)
}
