//! Experiment configuration: one human-editable JSON document per run.
//!
//! Everything a command needs — model shape, truth margin, sample-size
//! grid, sampler and estimator settings, master seed, output directory —
//! lives in one file so a run can be reproduced from the artifact alone.
//! The only out-of-band inputs are the CLI `--seed`/`--out` overrides and
//! the `SMF_RLCT_OUT` environment variable (output directory only).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::estimator::VolumeScalingConfig;
use crate::sim::GibbsConfig;
use crate::truth::GroundTruth;
use crate::ModelDims;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: ModelDims,
    /// Interior margin of the sampled ground truth: every truth entry and
    /// every pairwise column gap stays at least this far from the boundary.
    pub delta: f64,
    /// Sample sizes for sweep / free-energy runs; strictly increasing.
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub sampler: GibbsConfig,
    pub estimator: VolumeScalingConfig,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|source| ExperimentError::Json { path: path.to_path_buf(), source })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad(format!("delta must be a positive number, got {}", self.delta));
        }
        if self.n_grid.is_empty() {
            return bad("n_grid must not be empty".into());
        }
        if self.n_grid[0] == 0 {
            return bad("n_grid entries must be at least 1".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n_grid must be strictly increasing, got {:?}", self.n_grid));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        let s = &self.sampler;
        if s.thin == 0 {
            return bad("sampler.thin must be at least 1".into());
        }
        if s.burnin >= s.sweeps {
            return bad(format!(
                "sampler.burnin ({}) must be below sampler.sweeps ({})",
                s.burnin, s.sweeps
            ));
        }
        for (name, v) in [("alpha", s.alpha), ("beta", s.beta)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("sampler.{name} must be a positive number, got {v}"));
            }
        }
        self.estimator
            .validate()
            .map_err(|e| ExperimentError::Config(format!("estimator: {e}")))?;
        Ok(())
    }

    /// SHA-256 of the canonical serialization, hex-encoded. Overrides are
    /// applied before hashing, so the hash names the *effective* settings.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The ground truth every command in this config draws from.
    pub fn ground_truth(&self) -> Result<GroundTruth, ExperimentError> {
        GroundTruth::random_seeded(self.dims, self.delta, self.master_seed)
            .map_err(|e| ExperimentError::Config(format!("cannot sample ground truth: {e}")))
    }

    /// Output directory with CLI flag and environment override applied:
    /// `--out` beats `SMF_RLCT_OUT` beats the config field.
    pub fn resolved_output_dir(&self, cli_out: Option<&Path>) -> PathBuf {
        if let Some(dir) = cli_out {
            return dir.to_path_buf();
        }
        if let Some(dir) = std::env::var_os("SMF_RLCT_OUT") {
            return PathBuf::from(dir);
        }
        self.output_dir.clone()
    }
}

/// Short file-name tag for a model shape, e.g. `m3n3h2h0_2`.
pub fn dims_slug(dims: ModelDims) -> String {
    format!("m{}n{}h{}h0_{}", dims.m(), dims.n(), dims.h(), dims.h0())
}
